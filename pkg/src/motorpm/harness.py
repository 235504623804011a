"""Benchmark driver: the eleven model configurations, shared-split
evaluation, report rendering, model archives and single-reading diagnosis."""

from __future__ import annotations

import hashlib
import io
import json
import pickle
import struct
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from motorpm import metrics as M
from motorpm.baselines import KNearestNeighbors, LogisticRegression, NaiveBayes
from motorpm.boosting import CatBoostStyle, LightGBMStyle, XGBoostStyle
from motorpm.data import (
    SCHEMA_VERSION,
    Classifier,
    ConditionLabel,
    Dataset,
    MotorReading,
    ScalerParams,
    apply_scaler,
    encode,
    fit_scaler,
    serialize_csv,
    stratified_split_indices,
)
from motorpm.forest import RandomForest
from motorpm.svm import KernelSpec, SupportVectorMachine


class ModelError(RuntimeError):
    pass


# --------------------------------------------------------------------------
# Model configurations

@dataclass(frozen=True)
class ModelConfig:
    name: str
    family: str
    scaled: bool
    params: dict = field(default_factory=dict)


DEFAULT_CONFIGS: tuple[ModelConfig, ...] = (
    ModelConfig("NB", "nb", False, {"bins": 8, "alpha": 1.0}),
    ModelConfig("SVM-Linear", "svm", True,
                {"kind": "linear", "C": 1.0, "max_iter": 1000, "tol": 1e-3}),
    ModelConfig("SVM-Poly", "svm", True,
                {"kind": "poly", "degree": 5, "coef0": 0.75, "gamma": "scale", "C": 1.0,
                 "max_iter": 1000, "tol": 1e-3}),
    ModelConfig("SVM-Sigmoid", "svm", True,
                {"kind": "sigmoid", "C": 0.75, "gamma": 0.001, "coef0": 0.0, "max_iter": 45,
                 "tol": 1e-3}),
    ModelConfig("SVM-RBF", "svm", True,
                {"kind": "rbf", "C": 0.75, "gamma": 0.1, "max_iter": 1000, "tol": 1e-3}),
    ModelConfig("LogReg", "logreg", True, {"max_iter": 1000, "seed": 42, "l2": 1e-4}),
    ModelConfig("KNN", "knn", True, {"k": 5}),
    ModelConfig("RF", "rf", False, {"n_estimators": 200, "seed": 42}),
    ModelConfig("XGB", "xgb", False,
                {"rounds": 100, "lr": 0.3, "reg_lambda": 1.0, "gamma": 0.0, "max_depth": 6,
                 "min_child_weight": 1.0, "seed": 42}),
    ModelConfig("LGBM", "lgbm", False,
                {"rounds": 100, "lr": 0.1, "max_leaves": 31, "min_data_in_leaf": 10,
                 "min_split_gain": 0.01, "max_bins": 255, "seed": 42}),
    ModelConfig("CAT", "cat", False,
                {"rounds": 70, "lr": 0.01, "depth": 6, "n_permutations": 4, "seed": 42}),
)

MODEL_NAMES = tuple(c.name for c in DEFAULT_CONFIGS)


def config_by_name(name: str, configs=DEFAULT_CONFIGS) -> ModelConfig:
    for c in configs:
        if c.name.lower() == name.lower():
            return c
    raise KeyError(f"unknown model {name!r}; choose from {', '.join(c.name for c in configs)}")


def build_classifier(cfg: ModelConfig) -> Classifier:
    p = dict(cfg.params)
    if cfg.family == "nb":
        return NaiveBayes(**p)
    if cfg.family == "svm":
        return SupportVectorMachine(KernelSpec(**p))
    if cfg.family == "logreg":
        return LogisticRegression(**p)
    if cfg.family == "knn":
        return KNearestNeighbors(**p)
    if cfg.family == "rf":
        return RandomForest(**p)
    if cfg.family == "xgb":
        return XGBoostStyle(**p)
    if cfg.family == "lgbm":
        return LightGBMStyle(**p)
    if cfg.family == "cat":
        return CatBoostStyle(**p)
    raise ValueError(f"unknown model family {cfg.family!r}")


def _coerce(raw: str, like):
    raw = raw.strip()
    if isinstance(like, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(raw)
    if isinstance(like, float):
        return float(raw)
    try:
        return float(raw)
    except ValueError:
        return raw


def parse_config(text: str, base=DEFAULT_CONFIGS) -> tuple[ModelConfig, ...]:
    """Apply ``MODEL.param = value`` lines to ``base``. ``#`` starts a comment;
    keys left out keep their defaults."""
    configs = {c.name: c for c in base}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line or "." not in line.split("=", 1)[0]:
            raise ValueError(f"config line {lineno}: expected MODEL.param = value")
        key, value = line.split("=", 1)
        model, param = key.strip().rsplit(".", 1)
        cfg = config_by_name(model, tuple(configs.values()))
        if param not in cfg.params:
            raise ValueError(f"config line {lineno}: {cfg.name} has no parameter {param!r}")
        params = dict(cfg.params)
        params[param] = _coerce(value, cfg.params[param])
        configs[cfg.name] = replace(cfg, params=params)
    return tuple(configs[c.name] for c in base)


# --------------------------------------------------------------------------
# Fitted model with its preprocessing

class FittedModel(Classifier):
    """A classifier plus the scaler it was trained behind (if any).
    Accepts raw 11-channel feature rows."""

    def __init__(self, config: ModelConfig):
        self.config = config
        self.model = build_classifier(config)
        self.scaler: ScalerParams | None = None

    @property
    def name(self) -> str:
        return self.config.name

    def _prep(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return apply_scaler(self.scaler, X) if self.scaler is not None else X

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        if self.config.scaled:
            self.scaler = fit_scaler(X)
        self.model.fit(self._prep(X), y)
        return self

    def predict_proba(self, X):
        return self.model.predict_proba(self._prep(X))

    def predict(self, X):
        return self.model.predict(self._prep(X))


def train_model(name_or_cfg, data: Dataset, configs=DEFAULT_CONFIGS) -> FittedModel:
    cfg = name_or_cfg if isinstance(name_or_cfg, ModelConfig) else config_by_name(name_or_cfg, configs)
    try:
        return FittedModel(cfg).fit(encode(data), data.labels)
    except Exception as e:
        raise ModelError(f"{cfg.name}: {e}") from e


# --------------------------------------------------------------------------
# Benchmark

@dataclass(frozen=True)
class ModelResult:
    name: str
    accuracy: float
    confusion: np.ndarray


@dataclass(frozen=True)
class BenchmarkReport:
    results: tuple[ModelResult, ...]          # ascending accuracy, then name
    best: str
    best_confusion: np.ndarray
    best_metrics: M.MetricReport
    fingerprint: dict
    baseline_accuracy: float | None = None

    @property
    def accuracies(self) -> dict[str, float]:
        return {r.name: r.accuracy for r in self.results}


def _data_digest(data: Dataset) -> str:
    return hashlib.sha256(serialize_csv(data).encode()).hexdigest()[:16]


def assemble_report(results, fingerprint, baseline=None) -> BenchmarkReport:
    results = tuple(sorted(results, key=lambda r: (r.accuracy, r.name)))
    if not results:
        raise ValueError("report needs at least one model result")
    top = max(r.accuracy for r in results)
    best = min((r for r in results if r.accuracy == top), key=lambda r: r.name)
    return BenchmarkReport(results, best.name, best.confusion,
                           M.metric_report(best.confusion), dict(fingerprint), baseline)


def run_benchmark(data: Dataset, split_seed: int = 42, test_fraction: float = 0.2,
                  configs=DEFAULT_CONFIGS, return_models: bool = False):
    if not data.labeled:
        raise ValueError("benchmark needs a labeled dataset")
    if len(data) < 50:
        raise ValueError(f"benchmark needs at least 50 samples, got {len(data)}")
    X = encode(data)
    y = data.labels
    train, test = stratified_split_indices(y, test_fraction, split_seed)
    Xtr, ytr, Xte, yte = X[train], y[train], X[test], y[test]

    majority = int(np.argmax(np.bincount(ytr, minlength=3)))
    baseline = float(np.mean(yte == majority))

    results, fitted = [], {}
    for cfg in configs:
        try:
            model = FittedModel(cfg).fit(Xtr, ytr)
            pred = model.predict(Xte)
        except Exception as e:
            raise ModelError(f"{cfg.name}: {e}") from e
        cm = M.confusion_matrix(yte, pred)
        results.append(ModelResult(cfg.name, M.accuracy(cm), cm))
        fitted[cfg.name] = model

    fingerprint = {
        "n": len(data),
        "n_train": int(len(train)),
        "n_test": int(len(test)),
        "split_seed": int(split_seed),
        "test_fraction": float(test_fraction),
        "data_sha256": _data_digest(data),
    }
    report = assemble_report(results, fingerprint, baseline)
    if return_models:
        return report, fitted, (train, test)
    return report


# --------------------------------------------------------------------------
# Rendering

def pct(x: float) -> Decimal:
    """Fraction -> percent, rounded half-up to 2 decimals."""
    return (Decimal(repr(float(x))) * 100).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


METRIC_KEYS = ("accuracy", "precision_macro", "recall_macro", "specificity_macro", "f1_macro")
CLASS_NAMES = tuple(c.long_name for c in ConditionLabel)


def format_metric_block(m: M.MetricReport) -> str:
    d = m.as_dict()
    return "".join(f"{k}: {pct(d[k])}\n" for k in METRIC_KEYS)


def format_confusion(cm) -> str:
    cm = np.asarray(cm)
    corner = "actual \\ predicted"
    w0 = len(corner) + 2
    w = max(len(n) for n in CLASS_NAMES) + 2
    lines = [corner.ljust(w0) + "".join(n.rjust(w) for n in CLASS_NAMES)]
    for name, row in zip(CLASS_NAMES, cm):
        lines.append(name.ljust(w0) + "".join(str(int(v)).rjust(w) for v in row))
    return "\n".join(lines) + "\n"


def report_to_dict(r: BenchmarkReport) -> dict:
    return {
        "models": [
            {"name": res.name, "accuracy": res.accuracy, "accuracy_pct": float(pct(res.accuracy))}
            for res in r.results
        ],
        "best": {
            "name": r.best,
            "labels": [c.name for c in ConditionLabel],
            "confusion_matrix": np.asarray(r.best_confusion).astype(int).tolist(),
            "metrics": r.best_metrics.as_dict(),
            "metrics_pct": {k: float(pct(v)) for k, v in r.best_metrics.as_dict().items()},
        },
        "majority_baseline_accuracy": r.baseline_accuracy,
        "dataset": r.fingerprint,
    }


def render_report(r: BenchmarkReport, fmt: str = "text") -> str:
    if r is None or not r.results:
        raise ValueError("nothing to render: report has no models")
    if fmt in ("json", "machine-readable"):
        return json.dumps(report_to_dict(r), indent=2, sort_keys=True) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    out = io.StringIO()
    out.write("Held-out accuracy (%)\n")
    w = max(len(res.name) for res in r.results) + 2
    for res in r.results:
        out.write(f"  {res.name.ljust(w)}{pct(res.accuracy):>7}\n")
    if r.baseline_accuracy is not None:
        out.write(f"  {'(majority)'.ljust(w)}{pct(r.baseline_accuracy):>7}\n")
    out.write(f"\nBest model: {r.best}\n\nConfusion matrix\n")
    out.write(format_confusion(r.best_confusion))
    out.write("\nMetrics (%)\n")
    out.write(format_metric_block(r.best_metrics))
    if r.fingerprint:
        out.write("\nDataset: " + " ".join(f"{k}={v}" for k, v in r.fingerprint.items()) + "\n")
    return out.getvalue()


# --------------------------------------------------------------------------
# Model archive
#
# MAGIC | u16 format version | u16 name length | name | 16-byte schema hash |
# u64 payload length | payload (pickle) | 32-byte sha256 of everything before

MAGIC = b"MPMA"
FORMAT_VERSION = 1
_HEAD = struct.Struct("<4sHH")
_LEN = struct.Struct("<Q")
_DIGEST = 32


class ArchiveError(Exception):
    pass


class UnsupportedArchiveError(ArchiveError):
    pass


class ArchiveIntegrityError(ArchiveError):
    pass


class SchemaMismatchError(ArchiveError):
    pass


def schema_hash(schema: str = SCHEMA_VERSION) -> bytes:
    return hashlib.sha256(schema.encode()).digest()[:16]


@dataclass(frozen=True)
class ModelArchive:
    format_version: int
    config_name: str
    schema_hash: bytes
    payload: bytes

    def to_bytes(self) -> bytes:
        name = self.config_name.encode()
        body = (_HEAD.pack(MAGIC, self.format_version, len(name)) + name + self.schema_hash
                + _LEN.pack(len(self.payload)) + self.payload)
        return body + hashlib.sha256(body).digest()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ModelArchive":
        if len(blob) < _HEAD.size:
            raise ArchiveIntegrityError("archive truncated: header incomplete")
        magic, version, name_len = _HEAD.unpack_from(blob, 0)
        if magic != MAGIC:
            raise UnsupportedArchiveError(f"unknown archive format tag {magic!r}")
        if version != FORMAT_VERSION:
            raise UnsupportedArchiveError(
                f"unsupported archive version {version} (this build reads {FORMAT_VERSION})")
        pos = _HEAD.size
        need = pos + name_len + 16 + _LEN.size
        if len(blob) < need + _DIGEST:
            raise ArchiveIntegrityError("archive truncated")
        name = blob[pos:pos + name_len].decode("utf-8", errors="replace")
        pos += name_len
        shash = blob[pos:pos + 16]
        pos += 16
        (plen,) = _LEN.unpack_from(blob, pos)
        pos += _LEN.size
        if len(blob) != pos + plen + _DIGEST:
            raise ArchiveIntegrityError(
                f"archive length {len(blob)} does not match declared payload ({plen} bytes)")
        body, digest = blob[:-_DIGEST], blob[-_DIGEST:]
        if hashlib.sha256(body).digest() != digest:
            raise ArchiveIntegrityError("archive checksum mismatch")
        return cls(version, name, shash, blob[pos:pos + plen])


def save_model(model: FittedModel, path) -> ModelArchive:
    payload = pickle.dumps(model, protocol=4)
    arc = ModelArchive(FORMAT_VERSION, model.name, schema_hash(), payload)
    Path(path).write_bytes(arc.to_bytes())
    return arc


def load_archive(path) -> ModelArchive:
    return ModelArchive.from_bytes(Path(path).read_bytes())


def model_from_archive(arc: ModelArchive) -> FittedModel:
    current = schema_hash()
    if arc.schema_hash != current:
        raise SchemaMismatchError(
            f"archive schema {arc.schema_hash.hex()} does not match encoder schema "
            f"{current.hex()} ({SCHEMA_VERSION})")
    model = pickle.loads(arc.payload)
    if not isinstance(model, FittedModel):
        raise ArchiveIntegrityError("archive payload is not a fitted model")
    return model


def load_model(path) -> FittedModel:
    return model_from_archive(load_archive(path))


def diagnose(model, reading: MotorReading) -> dict:
    """Classify one reading. ``model`` is a FittedModel, a ModelArchive or a path."""
    if isinstance(model, ModelArchive):
        model = model_from_archive(model)
    elif not isinstance(model, FittedModel):
        model = load_model(model)
    x = encode([reading])
    label = ConditionLabel(int(model.predict(x)[0]))
    proba = model.predict_proba(x)[0]
    return {
        "model": model.name,
        "label": label.name,
        "condition": label.long_name,
        "probabilities": {c.name: float(proba[int(c)]) for c in ConditionLabel},
    }
