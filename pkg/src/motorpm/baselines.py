"""Multinomial Naive Bayes over quantile bins, softmax logistic regression,
and brute-force k-nearest neighbours."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from motorpm.data import N_CLASSES, Classifier


def softmax(scores: np.ndarray) -> np.ndarray:
    s = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(s)
    return e / e.sum(axis=1, keepdims=True)


# --------------------------------------------------------------------------
# Naive Bayes

@dataclass(frozen=True)
class BinningRule:
    """Per-channel ascending cut points. A value ``x`` falls in bin
    ``#{cuts < x}``, so a value equal to a cut stays in the lower bin."""

    cuts: tuple[np.ndarray, ...]
    n_bins: int

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.empty(X.shape, dtype=np.int64)
        for c, cuts in enumerate(self.cuts):
            out[:, c] = np.searchsorted(cuts, X[:, c], side="left")
        return out


def fit_binning(X: np.ndarray, n_bins: int) -> BinningRule:
    if n_bins < 2:
        raise ValueError("need at least 2 bins")
    qs = np.arange(1, n_bins) / n_bins
    cuts = []
    for c in range(X.shape[1]):
        col = X[:, c]
        cut = np.unique(np.quantile(col, qs))
        # a cut at the column maximum would leave its upper bin empty
        cut = cut[cut < col.max()]
        cuts.append(cut)
    return BinningRule(tuple(cuts), n_bins)


@dataclass(frozen=True)
class NaiveBayesModel:
    log_prior: np.ndarray        # (K,)
    log_likelihood: np.ndarray   # (K, channels, bins)
    binning: BinningRule


def nb_fit(X, y, bins: int = 8, alpha: float = 1.0, n_classes: int = N_CLASSES) -> NaiveBayesModel:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    rule = fit_binning(X, bins)
    B = rule.transform(X)
    n_ch = X.shape[1]
    counts = np.zeros((n_classes, n_ch, bins))
    for c in range(n_ch):
        np.add.at(counts[:, c, :], (y, B[:, c]), 1.0)
    lik = (counts + alpha) / (counts.sum(axis=2, keepdims=True) + alpha * bins)
    with np.errstate(divide="ignore"):
        log_prior = np.log(np.bincount(y, minlength=n_classes) / len(y))
    return NaiveBayesModel(log_prior, np.log(lik), rule)


def nb_predict_proba(m: NaiveBayesModel, X) -> np.ndarray:
    B = m.binning.transform(X)
    n_ch = B.shape[1]
    # (n, K): sum over channels of log P(bin | class)
    ll = m.log_likelihood[:, np.arange(n_ch)[None, :], B].sum(axis=2).T
    return softmax(ll + m.log_prior[None, :])


class NaiveBayes(Classifier):
    def __init__(self, bins: int = 8, alpha: float = 1.0):
        self.bins = bins
        self.alpha = alpha
        self.model_: NaiveBayesModel | None = None

    def fit(self, X, y):
        self.model_ = nb_fit(X, y, self.bins, self.alpha)
        return self

    def predict_proba(self, X):
        return nb_predict_proba(self.model_, X)


# --------------------------------------------------------------------------
# Logistic regression

def _augment(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X, np.ones((X.shape[0], 1))])


def logreg_loss_grad(w: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float = 1e-4):
    """Mean softmax cross-entropy plus ``l2/2 * ||w||^2`` over non-bias weights.

    ``w`` has shape (K, d + 1); the last column is the bias.
    """
    Xa = _augment(X)
    n = Xa.shape[0]
    scores = Xa @ w.T
    shifted = scores - scores.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1))
    log_p = shifted - log_z[:, None]
    loss = -log_p[np.arange(n), y].mean()
    reg_w = w.copy()
    reg_w[:, -1] = 0.0
    loss += 0.5 * l2 * float((reg_w ** 2).sum())

    resid = np.exp(log_p)
    resid[np.arange(n), y] -= 1.0
    grad = resid.T @ Xa / n + l2 * reg_w
    return float(loss), grad


@dataclass
class LogisticModel:
    weights: np.ndarray
    loss_history: list[float] = field(default_factory=list)


def logreg_fit(X, y, max_iter: int = 1000, seed: int = 42, l2: float = 1e-4,
               n_classes: int = N_CLASSES, tol: float = 1e-6) -> LogisticModel:
    """Full-batch gradient descent with Armijo backtracking from w = 0.

    ``seed`` is accepted for interface parity; the procedure is deterministic.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    w = np.zeros((n_classes, X.shape[1] + 1))
    loss, grad = logreg_loss_grad(w, X, y, l2)
    history = [loss]
    step = 1.0
    for _ in range(max_iter):
        if np.abs(grad).max() < tol:
            break
        gnorm2 = float((grad ** 2).sum())
        step *= 2.0
        while True:
            w_new = w - step * grad
            loss_new, grad_new = logreg_loss_grad(w_new, X, y, l2)
            if loss_new <= loss - 0.5 * step * gnorm2 or step < 1e-12:
                break
            step *= 0.5
        if loss_new > loss:
            break
        w, loss, grad = w_new, loss_new, grad_new
        history.append(loss)
    return LogisticModel(w, history)


def logreg_predict_proba(m: LogisticModel, X) -> np.ndarray:
    return softmax(_augment(X) @ m.weights.T)


class LogisticRegression(Classifier):
    def __init__(self, max_iter: int = 1000, seed: int = 42, l2: float = 1e-4):
        self.max_iter = max_iter
        self.seed = seed
        self.l2 = l2
        self.model_: LogisticModel | None = None

    def fit(self, X, y):
        self.model_ = logreg_fit(X, y, self.max_iter, self.seed, self.l2)
        return self

    def predict_proba(self, X):
        return logreg_predict_proba(self.model_, X)


# --------------------------------------------------------------------------
# k-NN

@dataclass(frozen=True)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int = 5

    def __post_init__(self):
        if self.k > len(self.y):
            raise ValueError(f"k={self.k} exceeds training size {len(self.y)}")


def _knn_vote(dist: np.ndarray, labels: np.ndarray, n_classes: int):
    votes = np.bincount(labels, minlength=n_classes)
    top = votes.max()
    tied = np.flatnonzero(votes == top)
    if len(tied) == 1:
        winner = int(tied[0])
    else:
        mean_d = [dist[labels == c].mean() for c in tied]
        winner = int(tied[int(np.argmin(mean_d))])  # argmin: first = lowest class
    return winner, votes / votes.sum()


def knn_predict(m: KnnModel, X, n_classes: int = N_CLASSES, chunk: int = 256):
    """Return (labels, probabilities). Distance ties go to the lower training
    index; vote ties to the smaller mean neighbour distance, then lower class."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    labels = np.empty(len(X), dtype=np.int64)
    proba = np.empty((len(X), n_classes))
    for start in range(0, len(X), chunk):
        q = X[start:start + chunk]
        d = np.sqrt(((q[:, None, :] - m.X[None, :, :]) ** 2).sum(axis=2))
        nn = np.argsort(d, axis=1, kind="stable")[:, :m.k]
        for r in range(len(q)):
            idx = nn[r]
            labels[start + r], proba[start + r] = _knn_vote(d[r, idx], m.y[idx], n_classes)
    return labels, proba


class KNearestNeighbors(Classifier):
    def __init__(self, k: int = 5):
        self.k = k
        self.model_: KnnModel | None = None

    def fit(self, X, y):
        self.model_ = KnnModel(np.asarray(X, dtype=float).copy(), np.asarray(y, dtype=np.int64), self.k)
        return self

    def predict_proba(self, X):
        return knn_predict(self.model_, X)[1]

    def predict(self, X):
        # vote ties are broken by distance, which argmax over vote shares cannot see
        return knn_predict(self.model_, X)[0]
