"""Softmax objective, regression trees and the boosted-ensemble container."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from motorpm.data import CR, N_CHANNELS, N_CLASSES, OPEN


def softmax(scores: np.ndarray) -> np.ndarray:
    s = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


def softmax_grad_hess(scores, labels):
    """Per-class gradient p - onehot, diagonal hessian p(1 - p), and the mean
    multiclass log-loss."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=np.int64)
    n, k = scores.shape
    s = scores - scores.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(s).sum(axis=1))
    log_p = s - log_z[:, None]
    p = np.exp(log_p)
    rows = np.arange(n)
    loss = float(-log_p[rows, labels].mean())
    g = p.copy()
    g[rows, labels] -= 1.0
    h = p * (1.0 - p)
    return g, h, loss


def log_loss(scores, labels) -> float:
    return softmax_grad_hess(scores, labels)[2]


def open_circuit_mask(X: np.ndarray) -> np.ndarray:
    """Missing-value mask: a CR channel is missing where its OPEN flag is set."""
    X = np.atleast_2d(X)
    m = np.zeros(X.shape, dtype=bool)
    if X.shape[1] == N_CHANNELS:
        for cr, op in zip(CR, OPEN):
            m[:, cr] = X[:, op] > 0.5
    return m


@dataclass(frozen=True)
class RegressionTree:
    """Flat binary regression tree. ``feature == -1`` marks a leaf.

    A present value goes left when ``x <= threshold``; a missing value
    follows ``default_left``.
    """

    feature: np.ndarray
    threshold: np.ndarray
    default_left: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    gain: np.ndarray

    def apply(self, X, missing=None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if missing is None:
            missing = np.zeros(X.shape, dtype=bool)
        node = np.zeros(len(X), dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while len(active):
            nd = node[active]
            f = self.feature[nd]
            x = X[active, f]
            go_left = np.where(missing[active, f], self.default_left[nd], x <= self.threshold[nd])
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] >= 0]
        return node

    def predict(self, X, missing=None) -> np.ndarray:
        return self.value[self.apply(X, missing)]

    @property
    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature < 0)


class TreeBuilder:
    """Accumulates nodes, then freezes into a :class:`RegressionTree`."""

    def __init__(self):
        self.feature, self.threshold, self.default_left = [], [], []
        self.left, self.right, self.value, self.n_samples, self.gain = [], [], [], [], []

    def add_leaf(self, value: float, n: int) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.default_left.append(True)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        self.n_samples.append(int(n))
        self.gain.append(0.0)
        return len(self.feature) - 1

    def make_split(self, node, feature, threshold, default_left, gain, left, right):
        self.feature[node] = int(feature)
        self.threshold[node] = float(threshold)
        self.default_left[node] = bool(default_left)
        self.gain[node] = float(gain)
        self.left[node] = left
        self.right[node] = right

    def build(self) -> RegressionTree:
        return RegressionTree(
            np.array(self.feature, dtype=np.int64),
            np.array(self.threshold, dtype=float),
            np.array(self.default_left, dtype=bool),
            np.array(self.left, dtype=np.int64),
            np.array(self.right, dtype=np.int64),
            np.array(self.value, dtype=float),
            np.array(self.n_samples, dtype=np.int64),
            np.array(self.gain, dtype=float),
        )


@dataclass
class BoostedEnsemble:
    """Base score plus learning-rate-scaled tree outputs.

    For ``XGB`` and ``LGBM`` each round holds one regression tree per class.
    For ``CAT`` each round holds one oblivious tree with 3-vector leaves and
    ``features`` carries the categorical encoder.
    """

    variant: str
    base_score: np.ndarray
    learning_rate: float
    rounds: list = field(default_factory=list)
    train_loss: list[float] = field(default_factory=list)
    features: Any = None

    @property
    def n_trees(self) -> int:
        if self.variant == "CAT":
            return len(self.rounds)
        return sum(len(r) for r in self.rounds)

    def raw_scores(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        scores = np.tile(np.asarray(self.base_score, dtype=float), (len(X), 1))
        if not self.rounds:
            return scores
        if self.variant == "CAT":
            Z = self.features.transform(X)
            for tree in self.rounds:
                scores += self.learning_rate * tree.predict(Z)
            return scores
        missing = open_circuit_mask(X) if self.variant == "XGB" else None
        for group in self.rounds:
            for k, tree in enumerate(group):
                scores[:, k] += self.learning_rate * tree.predict(X, missing)
        return scores


def boosted_predict(m: BoostedEnsemble, X):
    proba = softmax(m.raw_scores(X))
    return np.argmax(proba, axis=1), proba


def leaf_weight(G, H, reg_lambda):
    return -G / (H + reg_lambda)


def zero_base(n_classes: int = N_CLASSES) -> np.ndarray:
    return np.zeros(n_classes)
