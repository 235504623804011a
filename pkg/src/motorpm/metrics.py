"""Confusion matrix and one-vs-rest macro metrics.

Rows of the confusion matrix are actual classes, columns are predictions.
Per-class precision, recall, specificity and F1 come from the one-vs-rest
counts of each class and are averaged without weights. A per-class value
whose denominator is zero counts as 0 in the average.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from motorpm.data import N_CLASSES


@dataclass(frozen=True)
class BinaryCounts:
    tp: int
    fp: int
    tn: int
    fn: int


@dataclass(frozen=True)
class MetricReport:
    accuracy: float
    precision_macro: float
    recall_macro: float
    specificity_macro: float
    f1_macro: float

    def as_dict(self) -> dict:
        return asdict(self)


def _labels_to_int(seq) -> np.ndarray:
    return np.array([int(v) for v in seq], dtype=np.int64)


def confusion_matrix(actual: Sequence, predicted: Sequence, n_classes: int = N_CLASSES) -> np.ndarray:
    a = _labels_to_int(actual)
    p = _labels_to_int(predicted)
    if len(a) != len(p):
        raise ValueError(f"length mismatch: {len(a)} actual vs {len(p)} predicted")
    if len(a) == 0:
        raise ValueError("need at least one sample")
    if a.min() < 0 or p.min() < 0 or a.max() >= n_classes or p.max() >= n_classes:
        raise ValueError("label index out of range")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (a, p), 1)
    return cm


def _check(cm) -> np.ndarray:
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ValueError("confusion matrix must be square")
    if (cm < 0).any():
        raise ValueError("negative counts")
    if cm.sum() <= 0:
        raise ValueError("empty confusion matrix")
    return cm


def binary_counts(cm, class_index: int) -> BinaryCounts:
    cm = np.asarray(cm)
    k = cm.shape[0]
    if not 0 <= class_index < k:
        raise IndexError(f"class index {class_index} out of range for {k} classes")
    tp = int(cm[class_index, class_index])
    fp = int(cm[:, class_index].sum()) - tp
    fn = int(cm[class_index, :].sum()) - tp
    tn = int(cm.sum()) - tp - fp - fn
    return BinaryCounts(tp, fp, tn, fn)


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def precision(c: BinaryCounts) -> float:
    return _ratio(c.tp, c.tp + c.fp)


def recall(c: BinaryCounts) -> float:
    return _ratio(c.tp, c.tp + c.fn)


def specificity(c: BinaryCounts) -> float:
    return _ratio(c.tn, c.tn + c.fp)


def f1(c: BinaryCounts) -> float:
    p, r = precision(c), recall(c)
    return _ratio(2 * p * r, p + r)


def accuracy(cm) -> float:
    cm = _check(cm)
    return float(np.trace(cm)) / float(cm.sum())


def _macro(cm, fn) -> float:
    cm = _check(cm)
    return float(np.mean([fn(binary_counts(cm, k)) for k in range(cm.shape[0])]))


def precision_macro(cm) -> float:
    return _macro(cm, precision)


def recall_macro(cm) -> float:
    return _macro(cm, recall)


def specificity_macro(cm) -> float:
    return _macro(cm, specificity)


def f1_macro(cm) -> float:
    return _macro(cm, f1)


def metric_report(cm) -> MetricReport:
    return MetricReport(
        accuracy=accuracy(cm),
        precision_macro=precision_macro(cm),
        recall_macro=recall_macro(cm),
        specificity_macro=specificity_macro(cm),
        f1_macro=f1_macro(cm),
    )
