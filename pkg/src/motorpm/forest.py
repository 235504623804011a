"""CART classification trees (Gini) and a bagged random forest."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from motorpm.data import N_CLASSES, Classifier

MASK64 = (1 << 64) - 1
MIN_DECREASE = 1e-12


def gini(counts) -> float:
    c = np.asarray(counts, dtype=float)
    total = c.sum()
    if total <= 0:
        raise ValueError("gini of an empty node")
    p = c / total
    return float(1.0 - (p ** 2).sum())


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def tree_seed(master_seed: int, tree_index: int) -> int:
    return splitmix64((splitmix64(master_seed & MASK64) + tree_index) & MASK64)


@dataclass(frozen=True)
class DecisionTree:
    """Flat node arrays. ``feature == -1`` marks a leaf; a sample goes left
    when ``x[feature] <= threshold``."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray   # (n_nodes, K) training class counts

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def apply(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] >= 0
        while active.any():
            nd = node[active]
            f = self.feature[nd]
            go_left = X[np.flatnonzero(active), f] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = self.feature[node] >= 0
        return node

    def predict_proba(self, X) -> np.ndarray:
        c = self.counts[self.apply(X)]
        return c / c.sum(axis=1, keepdims=True)

    def depth(self) -> int:
        def rec(i):
            if self.feature[i] < 0:
                return 0
            return 1 + max(rec(self.left[i]), rec(self.right[i]))
        return rec(0)


def best_gini_split(X, y, idx, features, n_classes=N_CLASSES, min_samples_leaf=1):
    """Best (decrease, feature, threshold) over ``features`` for rows ``idx``.

    Thresholds are midpoints between consecutive distinct values. Ties keep
    the earlier feature in ``features`` order, then the smaller threshold.
    """
    yi = y[idx]
    m = len(idx)
    total = np.bincount(yi, minlength=n_classes).astype(float)
    parent = 1.0 - ((total / m) ** 2).sum()
    best = (0.0, -1, 0.0)
    nl = np.arange(1, m, dtype=float)
    nr = m - nl
    onehot = np.eye(n_classes)
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        left = np.cumsum(onehot[yi[order]], axis=0)[:-1]
        right = total - left
        gl = 1.0 - ((left / nl[:, None]) ** 2).sum(axis=1)
        gr = 1.0 - ((right / nr[:, None]) ** 2).sum(axis=1)
        dec = parent - (nl * gl + nr * gr) / m
        ok = (xs[1:] > xs[:-1]) & (nl >= min_samples_leaf) & (nr >= min_samples_leaf)
        if not ok.any():
            continue
        dec = np.where(ok, dec, -np.inf)
        k = int(np.argmax(dec))
        if dec[k] > best[0] + MIN_DECREASE and dec[k] > MIN_DECREASE:
            thr = 0.5 * (xs[k] + xs[k + 1])
            if thr >= xs[k + 1]:
                thr = xs[k]
            best = (float(dec[k]), int(f), float(thr))
    return best


def tree_fit(X, y, max_depth: int | None = None, min_samples_leaf: int = 1,
             m_try: int | None = None, rng: np.random.Generator | None = None,
             n_classes: int = N_CLASSES) -> DecisionTree:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if len(y) == 0:
        raise ValueError("cannot fit a tree on empty data")
    n_feat = X.shape[1]
    if m_try is None:
        m_try = n_feat

    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[idx], minlength=n_classes))
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if np.count_nonzero(counts[node]) <= 1:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        sub = X[idx]
        nonconst = np.flatnonzero(sub.max(axis=0) > sub.min(axis=0))
        if len(nonconst) == 0:
            continue
        if m_try < len(nonconst):
            feats = np.sort(rng.choice(nonconst, size=m_try, replace=False))
        else:
            feats = nonconst
        dec, f, thr = best_gini_split(X, y, idx, feats, n_classes, min_samples_leaf)
        if f < 0:
            continue
        go_left = X[idx, f] <= thr
        li = new_node(idx[go_left])
        ri = new_node(idx[~go_left])
        feature[node], threshold[node] = f, thr
        left[node], right[node] = li, ri
        stack.append((ri, idx[~go_left], depth + 1))
        stack.append((li, idx[go_left], depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=float),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(counts, dtype=np.int64).reshape(-1, n_classes),
    )


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    seed: int
    m_try: int
    bootstrap_indices: tuple[np.ndarray, ...]


def forest_fit(X, y, n_estimators: int = 200, seed: int = 42, m_try: int | None = None,
               max_depth: int | None = None, min_samples_leaf: int = 1) -> ForestModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    if n == 0:
        raise ValueError("cannot fit a forest on empty data")
    if m_try is None:
        m_try = math.ceil(math.sqrt(X.shape[1]))
    trees, boots = [], []
    for t in range(n_estimators):
        rng = np.random.default_rng(tree_seed(seed, t))
        boot = rng.integers(0, n, size=n)
        trees.append(tree_fit(X[boot], y[boot], max_depth, min_samples_leaf, m_try, rng))
        boots.append(boot)
    return ForestModel(tuple(trees), seed, m_try, tuple(boots))


def forest_predict(m: ForestModel, X):
    """Soft vote: average per-tree leaf class frequencies."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    proba = np.zeros((len(X), N_CLASSES))
    for tree in m.trees:
        proba += tree.predict_proba(X)
    proba /= len(m.trees)
    return np.argmax(proba, axis=1), proba


class RandomForest(Classifier):
    def __init__(self, n_estimators: int = 200, seed: int = 42, m_try: int | None = None,
                 max_depth: int | None = None, min_samples_leaf: int = 1):
        self.n_estimators = n_estimators
        self.seed = seed
        self.m_try = m_try
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.model_: ForestModel | None = None

    def fit(self, X, y):
        self.model_ = forest_fit(X, y, self.n_estimators, self.seed, self.m_try,
                                 self.max_depth, self.min_samples_leaf)
        return self

    def predict_proba(self, X):
        return forest_predict(self.model_, X)[1]
