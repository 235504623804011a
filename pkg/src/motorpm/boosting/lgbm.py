"""Histogram-based boosting with leaf-wise tree growth.

Every channel is pre-binned into at most ``max_bins`` bins. Each tree keeps
splitting whichever leaf offers the largest gain until it has
``max_leaves`` leaves or no leaf has an admissible split. A split is
admissible when both children hold at least ``min_data_in_leaf`` samples and
its gain ``GL^2/HL + GR^2/HR - G^2/H`` is at least ``min_split_gain``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from motorpm.boosting.core import (
    BoostedEnsemble,
    TreeBuilder,
    boosted_predict,
    leaf_weight,
    softmax_grad_hess,
    zero_base,
)
from motorpm.data import N_CLASSES, Classifier


def quantile_borders(col: np.ndarray, max_bins: int) -> np.ndarray:
    """Ascending cut points splitting ``col`` into at most ``max_bins`` bins.

    With few distinct values every gap gets a cut at its midpoint. Otherwise
    cuts sit at the midpoints of the gaps where the empirical CDF crosses
    ``j / max_bins``.
    """
    d, counts = np.unique(np.asarray(col, dtype=float), return_counts=True)
    if len(d) <= 1:
        return np.zeros(0)
    if len(d) <= max_bins:
        pos = np.arange(len(d) - 1)
    else:
        cdf = np.cumsum(counts) / counts.sum()
        qs = np.arange(1, max_bins) / max_bins
        pos = np.unique(np.searchsorted(cdf, qs - 1e-12, side="left"))
        pos = pos[pos < len(d) - 1]
    mids = 0.5 * (d[pos] + d[pos + 1])
    # guard against midpoints rounding onto the upper value
    mids = np.where(mids >= d[pos + 1], d[pos], mids)
    return np.unique(mids)


@dataclass(frozen=True)
class BinMapper:
    borders: tuple[np.ndarray, ...]

    @classmethod
    def fit(cls, X: np.ndarray, max_bins: int = 255) -> "BinMapper":
        return cls(tuple(quantile_borders(X[:, f], max_bins) for f in range(X.shape[1])))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape, dtype=np.int64)
        for f, b in enumerate(self.borders):
            out[:, f] = np.searchsorted(b, X[:, f], side="left")
        return out

    def n_bins(self, f: int) -> int:
        return len(self.borders[f]) + 1


def lgbm_split_gain(GL, HL, GR, HR, reg_lambda=0.0):
    return (GL * GL / (HL + reg_lambda) + GR * GR / (HR + reg_lambda)
            - (GL + GR) ** 2 / (HL + HR + reg_lambda))


@dataclass(frozen=True)
class LeafSplit:
    gain: float
    feature: int
    bin: int
    threshold: float


def lgbm_best_split(bins, mapper, g, h, idx, min_data_in_leaf=10, min_split_gain=0.01,
                    reg_lambda=0.0, min_sum_hessian=1e-3):
    """Best admissible histogram split of rows ``idx``, or None.

    A split at bin ``b`` sends bins ``<= b`` left. Ties keep the lower
    feature, then the lower bin.
    """
    if len(idx) < 2 * min_data_in_leaf:
        return None
    gi, hi = g[idx], h[idx]
    G, H, N = gi.sum(), hi.sum(), len(idx)
    best = None
    for f in range(bins.shape[1]):
        nb = mapper.n_bins(f)
        if nb < 2:
            continue
        b = bins[idx, f]
        cg = np.cumsum(np.bincount(b, weights=gi, minlength=nb))[:-1]
        ch = np.cumsum(np.bincount(b, weights=hi, minlength=nb))[:-1]
        cn = np.cumsum(np.bincount(b, minlength=nb))[:-1]
        ok = ((cn >= min_data_in_leaf) & (N - cn >= min_data_in_leaf)
              & (ch >= min_sum_hessian) & (H - ch >= min_sum_hessian))
        if not ok.any():
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            gain = lgbm_split_gain(cg, ch, G - cg, H - ch, reg_lambda)
        gain = np.where(ok, gain, -np.inf)
        k = int(np.argmax(gain))
        if gain[k] >= min_split_gain and gain[k] > 0 and (best is None or gain[k] > best.gain):
            best = LeafSplit(float(gain[k]), f, k, float(mapper.borders[f][k]))
    return best


def lgbm_grow_tree(bins, mapper, g, h, max_leaves=31, min_data_in_leaf=10,
                   min_split_gain=0.01, reg_lambda=0.0, min_sum_hessian=1e-3):
    tb = TreeBuilder()

    def make_leaf(idx):
        node = tb.add_leaf(leaf_weight(g[idx].sum(), h[idx].sum(), reg_lambda), len(idx))
        split = lgbm_best_split(bins, mapper, g, h, idx, min_data_in_leaf, min_split_gain,
                                reg_lambda, min_sum_hessian)
        return node, idx, split

    open_leaves = [make_leaf(np.arange(len(g)))]
    n_leaves = 1
    while n_leaves < max_leaves:
        cands = [i for i, (_, _, s) in enumerate(open_leaves) if s is not None]
        if not cands:
            break
        # best gain; equal gains keep the older leaf
        pick = max(cands, key=lambda i: (open_leaves[i][2].gain, -open_leaves[i][0]))
        node, idx, s = open_leaves.pop(pick)
        go_left = bins[idx, s.feature] <= s.bin
        left, right = make_leaf(idx[go_left]), make_leaf(idx[~go_left])
        tb.make_split(node, s.feature, s.threshold, True, s.gain, left[0], right[0])
        open_leaves += [left, right]
        n_leaves += 1
    return tb.build()


def lgbm_fit(X, y, rounds: int = 100, lr: float = 0.1, max_leaves: int = 31,
             min_data_in_leaf: int = 10, min_split_gain: float = 0.01, max_bins: int = 255,
             reg_lambda: float = 0.0, seed: int = 42, n_classes: int = N_CLASSES) -> BoostedEnsemble:
    """``seed`` is kept for interface parity; no step here is random."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    mapper = BinMapper.fit(X, max_bins)
    bins = mapper.transform(X)
    ens = BoostedEnsemble("LGBM", zero_base(n_classes), lr, features=mapper)
    F = np.tile(ens.base_score, (len(y), 1))
    g, h, loss = softmax_grad_hess(F, y)
    ens.train_loss.append(loss)
    for _ in range(rounds):
        group = tuple(
            lgbm_grow_tree(bins, mapper, g[:, k], h[:, k], max_leaves, min_data_in_leaf,
                           min_split_gain, reg_lambda)
            for k in range(n_classes)
        )
        for k, tree in enumerate(group):
            F[:, k] += lr * tree.predict(X)
        ens.rounds.append(group)
        g, h, loss = softmax_grad_hess(F, y)
        ens.train_loss.append(loss)
    return ens


class LightGBMStyle(Classifier):
    def __init__(self, rounds=100, lr=0.1, max_leaves=31, min_data_in_leaf=10,
                 min_split_gain=0.01, max_bins=255, reg_lambda=0.0, seed=42):
        self.rounds = rounds
        self.lr = lr
        self.max_leaves = max_leaves
        self.min_data_in_leaf = min_data_in_leaf
        self.min_split_gain = min_split_gain
        self.max_bins = max_bins
        self.reg_lambda = reg_lambda
        self.seed = seed
        self.model_: BoostedEnsemble | None = None

    def fit(self, X, y):
        self.model_ = lgbm_fit(X, y, self.rounds, self.lr, self.max_leaves,
                               self.min_data_in_leaf, self.min_split_gain, self.max_bins,
                               self.reg_lambda, self.seed)
        return self

    def predict_proba(self, X):
        return boosted_predict(self.model_, X)[1]
