"""Ordered boosting over oblivious trees with categorical target statistics.

The SOUND channel is treated as a categorical and replaced by one target
statistic per class. During training each of ``n_permutations`` random
orderings keeps

* its own ordered statistics -- sample i only sees the labels of samples
  that precede it in that ordering, and
* its own score array, where sample i's score is built from leaf values
  estimated on preceding samples only.

Each round one ordering (drawn from the seeded RNG) supplies the gradients
that choose the tree's level conditions. Leaf values of the retained tree are
the average, over orderings, of the Newton values ``-G / (H + lambda)``
computed from that ordering's own gradients. At prediction time the
statistics come from the whole training set.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from motorpm.boosting.core import (
    BoostedEnsemble,
    boosted_predict,
    softmax_grad_hess,
    zero_base,
)
from motorpm.boosting.lgbm import quantile_borders
from motorpm.data import N_CLASSES, SOUND, Classifier


# --------------------------------------------------------------------------
# Target statistics

@dataclass
class OrderedTargetStats:
    """Running per-category label sums and counts, fed in permutation order."""

    n_classes: int = N_CLASSES
    prior_weight: float = 1.0
    prior: float = 1.0 / N_CLASSES
    sums: dict = field(default_factory=dict)
    counts: dict = field(default_factory=dict)

    def update(self, category, label: int) -> None:
        s = self.sums.setdefault(category, np.zeros(self.n_classes))
        s[label] += 1.0
        self.counts[category] = self.counts.get(category, 0) + 1


def ordered_target_stat(history: OrderedTargetStats, category, class_index: int,
                        a: float | None = None, p: float | None = None) -> float:
    """(#preceding same-category samples of the class + a*p) / (#preceding + a)."""
    a = history.prior_weight if a is None else a
    p = history.prior if p is None else p
    if a <= 0:
        raise ValueError("prior weight must be positive")
    hits = history.sums[category][class_index] if category in history.sums else 0.0
    n = history.counts.get(category, 0)
    return float((hits + a * p) / (n + a))


def ordered_ctr(categories, labels, perm, n_classes=N_CLASSES, a=1.0, p=1.0 / N_CLASSES):
    """(n, K) ordered statistics: row i uses only samples before i in ``perm``."""
    out = np.empty((len(labels), n_classes))
    hist = OrderedTargetStats(n_classes, a, p)
    for i in perm:
        c = categories[i]
        for k in range(n_classes):
            out[i, k] = ordered_target_stat(hist, c, k)
        hist.update(c, int(labels[i]))
    return out


# --------------------------------------------------------------------------
# Feature space

@dataclass(frozen=True)
class CatFeatures:
    """Maps raw feature rows to [numeric channels..., CTR_H, CTR_B, CTR_PM]."""

    numeric_cols: tuple[int, ...]
    cat_col: int
    ctr_table: dict          # category -> (K,) full-training statistics
    prior_weight: float
    prior: float
    borders: tuple[np.ndarray, ...]
    names: tuple[str, ...]
    n_classes: int = N_CLASSES

    def ctr_full(self, cats) -> np.ndarray:
        default = np.full(self.n_classes, self.prior)
        return np.vstack([self.ctr_table.get(c, default) for c in cats])

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        cats = X[:, self.cat_col].astype(np.int64)
        return np.hstack([X[:, list(self.numeric_cols)], self.ctr_full(cats)])

    def binarize(self, Z) -> np.ndarray:
        out = np.empty(Z.shape, dtype=np.int64)
        for j, b in enumerate(self.borders):
            out[:, j] = np.searchsorted(b, Z[:, j], side="left")
        return out


@dataclass(frozen=True)
class ObliviousTree:
    """``depth`` level conditions ``z[feature] > threshold`` shared across each
    level. Leaf index bit ``depth-1-l`` is the outcome of level ``l``."""

    features: tuple[int, ...]
    borders: tuple[int, ...]
    thresholds: tuple[float, ...]
    leaf_values: np.ndarray   # (2**depth, K)

    @property
    def depth(self) -> int:
        return len(self.features)

    def leaf_index(self, Z) -> np.ndarray:
        Z = np.atleast_2d(Z)
        idx = np.zeros(len(Z), dtype=np.int64)
        for f, t in zip(self.features, self.thresholds):
            idx = 2 * idx + (Z[:, f] > t)
        return idx

    def predict(self, Z) -> np.ndarray:
        return self.leaf_values[self.leaf_index(Z)]


# --------------------------------------------------------------------------
# Training

def _choose_level(bins_list, n_bins, leaf, g, h, level, used, reg_lambda, n_classes):
    """Pick the (feature, border) maximizing sum over leaves and classes of
    G^2/(H + lambda) after splitting every current leaf by it."""
    n_leaves = 1 << level
    best = (-np.inf, -1, -1)
    for f, nb in enumerate(n_bins):
        if nb < 2:
            continue
        key = leaf * nb + bins_list[:, f]
        size = n_leaves * nb
        Gb = np.stack([np.bincount(key, weights=g[:, k], minlength=size) for k in range(n_classes)], -1)
        Hb = np.stack([np.bincount(key, weights=h[:, k], minlength=size) for k in range(n_classes)], -1)
        Gb = Gb.reshape(n_leaves, nb, n_classes)
        Hb = Hb.reshape(n_leaves, nb, n_classes)
        GL = np.cumsum(Gb, axis=1)[:, :-1]
        HL = np.cumsum(Hb, axis=1)[:, :-1]
        GR = Gb.sum(axis=1, keepdims=True) - GL
        HR = Hb.sum(axis=1, keepdims=True) - HL
        score = (GL ** 2 / (HL + reg_lambda) + GR ** 2 / (HR + reg_lambda)).sum(axis=(0, 2))
        for b in range(nb - 1):
            if (f, b) in used:
                score[b] = -np.inf
        b = int(np.argmax(score))
        if score[b] > best[0]:
            best = (float(score[b]), f, b)
    if best[1] < 0:
        raise ValueError("not enough distinct split conditions for the requested depth")
    return best[1], best[2]


def _ordered_leaf_deltas(leaf, g, h, perm, reg_lambda):
    """Newton leaf values where sample i only sees same-leaf predecessors."""
    lo = leaf[perm]
    s = np.argsort(lo, kind="stable")
    rows = perm[s]
    lo = lo[s]
    gs, hs = g[rows], h[rows]
    cg = np.cumsum(gs, axis=0) - gs
    ch = np.cumsum(hs, axis=0) - hs
    start = np.searchsorted(lo, lo, side="left")
    cg = cg - cg[start]
    ch = ch - ch[start]
    delta = np.empty_like(g)
    delta[rows] = -cg / (ch + reg_lambda)
    return delta


def _leaf_values(leaf, g, h, n_leaves, reg_lambda):
    K = g.shape[1]
    G = np.stack([np.bincount(leaf, weights=g[:, k], minlength=n_leaves) for k in range(K)], -1)
    H = np.stack([np.bincount(leaf, weights=h[:, k], minlength=n_leaves) for k in range(K)], -1)
    return -G / (H + reg_lambda)


def cat_fit(X, y, rounds: int = 70, lr: float = 0.01, depth: int = 6, n_permutations: int = 4,
            seed: int = 42, reg_lambda: float = 1.0, border_count: int = 32,
            ctr_border_count: int = 15, prior_weight: float = 1.0,
            cat_col: int = SOUND, n_classes: int = N_CLASSES) -> BoostedEnsemble:
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n = len(y)
    rng = np.random.default_rng(seed)
    prior = 1.0 / n_classes

    numeric_cols = tuple(c for c in range(X.shape[1]) if c != cat_col)
    cats = X[:, cat_col].astype(np.int64)
    perms = [rng.permutation(n) for _ in range(n_permutations)]
    ctrs = [ordered_ctr(cats, y, p, n_classes, prior_weight, prior) for p in perms]

    full = OrderedTargetStats(n_classes, prior_weight, prior)
    for i in range(n):
        full.update(int(cats[i]), int(y[i]))
    table = {c: np.array([ordered_target_stat(full, c, k) for k in range(n_classes)])
             for c in sorted(full.counts)}

    Xn = X[:, list(numeric_cols)]
    borders = [quantile_borders(Xn[:, j], border_count) for j in range(Xn.shape[1])]
    pooled = np.vstack(ctrs)
    borders += [quantile_borders(pooled[:, k], ctr_border_count) for k in range(n_classes)]
    names = tuple(f"x{c}" for c in numeric_cols) + tuple(f"ctr{k}" for k in range(n_classes))
    feats = CatFeatures(numeric_cols, cat_col, table, prior_weight, prior,
                        tuple(borders), names, n_classes)

    Z_perm = [np.hstack([Xn, c]) for c in ctrs]
    B_perm = [feats.binarize(Z) for Z in Z_perm]
    Z_full = feats.transform(X)
    n_bins = [len(b) + 1 for b in feats.borders]

    ens = BoostedEnsemble("CAT", zero_base(n_classes), lr, features=feats)
    S = [np.tile(ens.base_score, (n, 1)) for _ in perms]   # ordered scores
    F = np.tile(ens.base_score, (n, 1))                     # model scores
    ens.train_loss.append(softmax_grad_hess(F, y)[2])
    n_leaves = 1 << depth

    for _ in range(rounds):
        grads = [softmax_grad_hess(s, y)[:2] for s in S]
        r = int(rng.integers(n_permutations))
        g, h = grads[r]
        leaf = np.zeros(n, dtype=np.int64)
        used = set()
        conds = []
        for level in range(depth):
            f, b = _choose_level(B_perm[r], n_bins, leaf, g, h, level, used, reg_lambda, n_classes)
            used.add((f, b))
            conds.append((f, b))
            leaf = 2 * leaf + (B_perm[r][:, f] > b)

        values = np.zeros((n_leaves, n_classes))
        for j, (perm, B) in enumerate(zip(perms, B_perm)):
            lj = np.zeros(n, dtype=np.int64)
            for f, b in conds:
                lj = 2 * lj + (B[:, f] > b)
            gj, hj = grads[j]
            values += _leaf_values(lj, gj, hj, n_leaves, reg_lambda)
            S[j] += lr * _ordered_leaf_deltas(lj, gj, hj, perm, reg_lambda)
        values /= n_permutations

        tree = ObliviousTree(
            features=tuple(f for f, _ in conds),
            borders=tuple(b for _, b in conds),
            thresholds=tuple(float(feats.borders[f][b]) for f, b in conds),
            leaf_values=values,
        )
        F += lr * tree.predict(Z_full)
        ens.rounds.append(tree)
        ens.train_loss.append(softmax_grad_hess(F, y)[2])
    return ens


class CatBoostStyle(Classifier):
    def __init__(self, rounds=70, lr=0.01, depth=6, n_permutations=4, seed=42, reg_lambda=1.0):
        self.rounds = rounds
        self.lr = lr
        self.depth = depth
        self.n_permutations = n_permutations
        self.seed = seed
        self.reg_lambda = reg_lambda
        self.model_: BoostedEnsemble | None = None

    def fit(self, X, y):
        self.model_ = cat_fit(X, y, self.rounds, self.lr, self.depth, self.n_permutations,
                              self.seed, self.reg_lambda)
        return self

    def predict_proba(self, X):
        return boosted_predict(self.model_, X)[1]
