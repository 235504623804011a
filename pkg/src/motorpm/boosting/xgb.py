"""Second-order boosting with exact greedy split enumeration.

Open-circuit windings are treated as missing CR values: they are held out
of threshold enumeration and routed as a block, with the direction that
gives the larger gain learned per split.
"""

from __future__ import annotations

import numpy as np

from motorpm.boosting.core import (
    BoostedEnsemble,
    TreeBuilder,
    boosted_predict,
    leaf_weight,
    open_circuit_mask,
    softmax_grad_hess,
    zero_base,
)
from motorpm.data import N_CLASSES, Classifier

MIN_GAIN = 1e-10


def xgb_leaf_weight(G: float, H: float, reg_lambda: float) -> float:
    return float(leaf_weight(G, H, reg_lambda))


def xgb_split_gain(GL, HL, GR, HR, reg_lambda, gamma):
    def score(G, H):
        return G * G / (H + reg_lambda)
    return 0.5 * (score(GL, HL) + score(GR, HR) - score(GL + GR, HL + HR)) - gamma


def xgb_best_split(X, g, h, missing, idx, reg_lambda=1.0, gamma=0.0, min_child_weight=1.0):
    """Best split of rows ``idx`` as (gain, feature, threshold, default_left).

    Candidates are visited feature by feature, missing block left before
    right, thresholds ascending; the first strictly best candidate wins.
    Returns feature -1 when nothing has positive gain.
    """
    G, H = g[idx].sum(), h[idx].sum()
    best = (0.0, -1, 0.0, True)
    for f in range(X.shape[1]):
        miss = missing[idx, f]
        Gm, Hm = g[idx[miss]].sum(), h[idx[miss]].sum()
        present = idx[~miss]
        if len(present) < 2:
            continue
        xs = X[present, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        cut = np.flatnonzero(xs[1:] > xs[:-1])
        if len(cut) == 0:
            continue
        cg = np.cumsum(g[present][order])[cut]
        ch = np.cumsum(h[present][order])[cut]
        thr = 0.5 * (xs[cut] + xs[cut + 1])
        thr = np.where(thr >= xs[cut + 1], xs[cut], thr)
        for default_left in (True, False):
            GL = cg + Gm if default_left else cg
            HL = ch + Hm if default_left else ch
            GR, HR = G - GL, H - HL
            gain = xgb_split_gain(GL, HL, GR, HR, reg_lambda, gamma)
            ok = (HL >= min_child_weight) & (HR >= min_child_weight)
            if not ok.any():
                continue
            gain = np.where(ok, gain, -np.inf)
            k = int(np.argmax(gain))
            if gain[k] > best[0] and gain[k] > MIN_GAIN:
                best = (float(gain[k]), f, float(thr[k]), default_left)
            if not miss.any():
                break   # both directions identical
    return best


def xgb_grow_tree(X, g, h, missing, max_depth=6, reg_lambda=1.0, gamma=0.0,
                  min_child_weight=1.0, split_finder=None):
    split_finder = split_finder or xgb_best_split
    tb = TreeBuilder()
    idx = np.arange(len(g))
    root = tb.add_leaf(xgb_leaf_weight(g.sum(), h.sum(), reg_lambda), len(idx))
    stack = [(root, idx, 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth:
            continue
        gain, f, thr, dl = split_finder(X, g, h, missing, idx, reg_lambda, gamma, min_child_weight)
        if f < 0:
            continue
        miss = missing[idx, f]
        go_left = np.where(miss, dl, X[idx, f] <= thr)
        li, ri = idx[go_left], idx[~go_left]
        ln = tb.add_leaf(xgb_leaf_weight(g[li].sum(), h[li].sum(), reg_lambda), len(li))
        rn = tb.add_leaf(xgb_leaf_weight(g[ri].sum(), h[ri].sum(), reg_lambda), len(ri))
        tb.make_split(node, f, thr, dl, gain, ln, rn)
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))
    return tb.build()


def xgb_fit(X, y, rounds: int = 100, lr: float = 0.3, reg_lambda: float = 1.0,
            gamma: float = 0.0, max_depth: int = 6, seed: int = 42,
            min_child_weight: float = 1.0, n_classes: int = N_CLASSES) -> BoostedEnsemble:
    """``seed`` is kept for interface parity; no step here is random."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    missing = open_circuit_mask(X)
    ens = BoostedEnsemble("XGB", zero_base(n_classes), lr)
    F = np.tile(ens.base_score, (len(y), 1))
    g, h, loss = softmax_grad_hess(F, y)
    ens.train_loss.append(loss)
    for _ in range(rounds):
        group = []
        for k in range(n_classes):
            tree = xgb_grow_tree(X, g[:, k], h[:, k], missing, max_depth, reg_lambda,
                                 gamma, min_child_weight)
            group.append(tree)
        for k, tree in enumerate(group):
            F[:, k] += lr * tree.predict(X, missing)
        ens.rounds.append(tuple(group))
        g, h, loss = softmax_grad_hess(F, y)
        ens.train_loss.append(loss)
    return ens


class XGBoostStyle(Classifier):
    def __init__(self, rounds=100, lr=0.3, reg_lambda=1.0, gamma=0.0, max_depth=6,
                 min_child_weight=1.0, seed=42):
        self.rounds = rounds
        self.lr = lr
        self.reg_lambda = reg_lambda
        self.gamma = gamma
        self.max_depth = max_depth
        self.min_child_weight = min_child_weight
        self.seed = seed
        self.model_: BoostedEnsemble | None = None

    def fit(self, X, y):
        self.model_ = xgb_fit(X, y, self.rounds, self.lr, self.reg_lambda, self.gamma,
                              self.max_depth, self.seed, self.min_child_weight)
        return self

    def predict_proba(self, X):
        return boosted_predict(self.model_, X)[1]
