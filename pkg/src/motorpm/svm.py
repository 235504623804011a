"""Soft-margin SVM trained with SMO, lifted to three classes one-vs-one.

The binary solver works on the dual

    min_a  1/2 a^T Q a - e^T a,   Q_ij = y_i y_j K(x_i, x_j),
    s.t.   0 <= a_i <= C,  sum_i y_i a_i = 0

and picks the maximal-violating pair at every step. One "pass" is n pair
updates, so ``max_iter`` passes allow at most ``max_iter * n`` updates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from motorpm.data import N_CLASSES, Classifier

KERNELS = ("linear", "poly", "sigmoid", "rbf")
TAU = 1e-12


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"
    degree: int = 3
    gamma: float | str = 0.1   # "scale" resolves against the training data
    coef0: float = 0.0
    C: float = 1.0
    max_iter: int = 1000
    tol: float = 1e-3

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.C <= 0:
            raise ValueError("C must be positive")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if self.gamma != "scale" and self.kind != "linear" and self.gamma <= 0:
            raise ValueError("gamma must be positive")


def kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    if spec.kind == "rbf":
        sq = (A ** 2).sum(1)[:, None] + (B ** 2).sum(1)[None, :] - 2.0 * A @ B.T
        return np.exp(-spec.gamma * np.maximum(sq, 0.0))
    dot = A @ B.T
    if spec.kind == "linear":
        return dot
    if spec.kind == "poly":
        return (spec.gamma * dot + spec.coef0) ** spec.degree
    return np.tanh(spec.gamma * dot + spec.coef0)


def kernel_eval(spec: KernelSpec, x, z) -> float:
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    if x.shape != z.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {z.shape}")
    if spec.kind == "rbf":
        d = x - z
        return float(np.exp(-spec.gamma * np.dot(d, d)))
    return float(kernel_matrix(spec, x[None, :], z[None, :])[0, 0])


@dataclass(frozen=True)
class BinarySvmModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray      # alpha_i * y_i for support vectors
    bias: float
    spec: KernelSpec
    alpha: np.ndarray          # full alpha vector, training order
    y: np.ndarray
    n_updates: int
    converged: bool

    def decision_function(self, X) -> np.ndarray:
        if len(self.dual_coef) == 0:
            return np.full(np.atleast_2d(X).shape[0], self.bias)
        return kernel_matrix(self.spec, X, self.support_vectors) @ self.dual_coef + self.bias


def smo_fit_binary(X, y, spec: KernelSpec) -> BinarySvmModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.any(y == 1) and np.any(y == -1)) or not np.all(np.abs(y) == 1):
        raise ValueError("binary SVM needs labels in {-1, +1} with both present")
    n = len(y)
    C = spec.C
    K = kernel_matrix(spec, X, X)
    diag = np.diag(K).copy()
    alpha = np.zeros(n)
    grad = -np.ones(n)          # gradient of the dual objective
    pos = y > 0

    converged = False
    max_updates = spec.max_iter * n
    it = 0
    while it < max_updates:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        score = -y * grad
        i = int(np.argmax(np.where(up, score, -np.inf)))
        j = int(np.argmin(np.where(low, score, np.inf)))
        gap = score[i] - score[j]
        if gap < spec.tol:
            converged = True
            break
        eta = diag[i] + diag[j] - 2.0 * K[i, j]
        t = gap / (eta if eta > TAU else TAU)
        # move alpha_i by +y_i t and alpha_j by -y_j t, staying in the box
        t = min(t, C - alpha[i] if pos[i] else alpha[i])
        t = min(t, alpha[j] if pos[j] else C - alpha[j])
        alpha[i] += y[i] * t
        alpha[j] -= y[j] * t
        grad += t * y * (K[:, i] - K[:, j])
        it += 1
    np.clip(alpha, 0.0, C, out=alpha)

    # bias from free vectors, else the midpoint of the feasible interval
    yg = y * grad
    free = (alpha > 1e-12) & (alpha < C - 1e-12)
    if free.any():
        rho = float(yg[free].mean())
    else:
        up = np.where(pos, alpha < C, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < C)
        ub = yg[up].min() if up.any() else np.inf
        lb = yg[low].max() if low.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = float((ub + lb) / 2)
        else:
            rho = float(ub if np.isfinite(ub) else lb)
    sv = alpha > 0
    return BinarySvmModel(
        support_vectors=X[sv].copy(),
        dual_coef=(alpha * y)[sv],
        bias=-rho,
        spec=spec,
        alpha=alpha,
        y=y,
        n_updates=it,
        converged=converged,
    )


def resolve_gamma(spec: KernelSpec, X: np.ndarray) -> KernelSpec:
    """Replace gamma="scale" by 1 / (n_features * mean channel variance)."""
    if spec.gamma != "scale":
        return spec
    var = float(np.asarray(X).var(axis=0).mean())
    gamma = 1.0 / (X.shape[1] * var) if var > 0 else 1.0
    return replace(spec, gamma=gamma)


PAIRS = tuple(combinations(range(N_CLASSES), 2))   # (H,B), (H,PM), (B,PM)


@dataclass(frozen=True)
class MulticlassSvmModel:
    pairs: tuple[tuple[int, int], ...]
    models: tuple[BinarySvmModel, ...]


def svm_fit(X, y, spec: KernelSpec) -> MulticlassSvmModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    missing = [c for c in range(N_CLASSES) if not np.any(y == c)]
    if missing:
        raise ValueError(f"classes {missing} absent from training data")
    spec = resolve_gamma(spec, X)
    models = []
    for a, b in PAIRS:
        mask = (y == a) | (y == b)
        yy = np.where(y[mask] == a, 1.0, -1.0)
        models.append(smo_fit_binary(X[mask], yy, spec))
    return MulticlassSvmModel(PAIRS, tuple(models))


def svm_predict(m: MulticlassSvmModel, X):
    """Return (labels, probabilities) by one-vs-one voting.

    Vote ties go to the larger summed |f| among the tied classes, then the
    lower class index. Probabilities are vote shares plus 1e-9, normalized.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = len(X)
    votes = np.zeros((n, N_CLASSES))
    margin = np.zeros((n, N_CLASSES))
    for (a, b), model in zip(m.pairs, m.models):
        f = model.decision_function(X)
        win_a = f > 0
        votes[win_a, a] += 1
        votes[~win_a, b] += 1
        margin[win_a, a] += np.abs(f[win_a])
        margin[~win_a, b] += np.abs(f[~win_a])
    labels = np.empty(n, dtype=np.int64)
    for r in range(n):
        tied = np.flatnonzero(votes[r] == votes[r].max())
        labels[r] = tied[int(np.argmax(margin[r, tied]))]
    proba = votes + 1e-9
    return labels, proba / proba.sum(axis=1, keepdims=True)


class SupportVectorMachine(Classifier):
    def __init__(self, spec: KernelSpec):
        self.spec = spec
        self.model_: MulticlassSvmModel | None = None

    def fit(self, X, y):
        self.model_ = svm_fit(X, y, self.spec)
        return self

    def predict_proba(self, X):
        return svm_predict(self.model_, X)[1]

    def predict(self, X):
        return svm_predict(self.model_, X)[0]
