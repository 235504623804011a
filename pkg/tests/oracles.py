"""Slow, obviously-correct reference implementations used as test oracles."""

import math
from collections import Counter

import numpy as np

from motorpm.boosting.xgb import MIN_GAIN


def dyadic_grad_hess(rng, n):
    """Gradients/hessians on a 1/64 grid: every partial sum is exact in float,
    so split gains from different summation orders agree bit for bit."""
    g = rng.integers(-64, 65, n) / 64.0
    h = rng.integers(1, 17, n) / 16.0
    return g, h


def knn_oracle(Xtr, ytr, Xq, k=5):
    """Sort every (distance, index) pair and vote."""
    out = []
    for q in Xq.tolist():
        pairs = sorted((math.dist(q, x), i) for i, x in enumerate(Xtr.tolist()))
        near = pairs[:k]
        votes = Counter(int(ytr[i]) for _, i in near)
        top = max(votes.values())
        tied = [c for c in range(3) if votes.get(c, 0) == top]
        mean_d = {c: np.mean([d for d, i in near if ytr[i] == c]) for c in tied}
        out.append(min(tied, key=lambda c: (mean_d[c], c)))
    return np.array(out)


def xgb_brute_force(X, g, h, missing, idx, reg_lambda=1.0, gamma=0.0, min_child_weight=1.0):
    """Enumerate every (channel, default side, midpoint) with explicit masks."""
    G, H = sum(g[idx]), sum(h[idx])
    best = (0.0, -1, 0.0, True)
    for f in range(X.shape[1]):
        miss = missing[idx, f]
        vals = sorted(set(X[idx[~miss], f].tolist()))
        for default_left in (True, False):
            for a, b in zip(vals[:-1], vals[1:]):
                t = (a + b) / 2
                go_left = np.where(miss, default_left, X[idx, f] <= t)
                GL, HL = sum(g[idx[go_left]]), sum(h[idx[go_left]])
                GR, HR = G - GL, H - HL
                if HL < min_child_weight or HR < min_child_weight:
                    continue
                gain = 0.5 * (GL * GL / (HL + reg_lambda) + GR * GR / (HR + reg_lambda)
                              - (GL + GR) ** 2 / (HL + HR + reg_lambda)) - gamma
                if gain > best[0] and gain > MIN_GAIN:
                    best = (gain, f, t, default_left)
    return best


def exact_lgbm_split(X, g, h, idx, min_data=10, min_gain=0.01, min_hess=1e-3):
    """Exact greedy over raw values with the histogram learner's admissibility
    rules. Returns (gain, feature, left mask over idx) or None."""
    G, H, n = sum(g[idx]), sum(h[idx]), len(idx)
    best = None
    for f in range(X.shape[1]):
        vals = sorted(set(X[idx, f].tolist()))
        for a, b in zip(vals[:-1], vals[1:]):
            m = X[idx, f] <= (a + b) / 2
            nl = int(m.sum())
            GL, HL = sum(g[idx[m]]), sum(h[idx[m]])
            GR, HR = G - GL, H - HL
            if nl < min_data or n - nl < min_data or HL < min_hess or HR < min_hess:
                continue
            gain = GL * GL / HL + GR * GR / HR - (GL + GR) ** 2 / (HL + HR)
            if gain >= min_gain and gain > 0 and (best is None or gain > best[0]):
                best = (gain, f, m)
    return best


def finite_difference(fun, w, eps=1e-5):
    """Central differences of scalar ``fun`` at every entry of ``w``."""
    out = np.empty_like(w)
    for idx in np.ndindex(*w.shape):
        e = np.zeros_like(w)
        e[idx] = eps
        out[idx] = (fun(w + e) - fun(w - e)) / (2 * eps)
    return out


def rel_err(a, b):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), 1e-8)
