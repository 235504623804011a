"""Dataset schema for the 160 kW motor readings, CSV I/O, feature encoding,
stratified splitting and z-score scaling.

Feature layout (11 channels, fixed order)::

    TEP, CI1, CI2, CI3, CR1, CR2, CR3, OPEN1, OPEN2, OPEN3, SOUND

An open-circuit winding is encoded as CR = 0.0 with its OPEN flag set to 1.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Sequence, TextIO

import numpy as np

CHANNELS = (
    "TEP", "CI1", "CI2", "CI3", "CR1", "CR2", "CR3",
    "OPEN1", "OPEN2", "OPEN3", "SOUND",
)
N_CHANNELS = len(CHANNELS)
N_CLASSES = 3

# channel index groups
TEP = 0
CI = (1, 2, 3)
CR = (4, 5, 6)
OPEN = (7, 8, 9)
SOUND = 10

HEADER = ("TEP", "CI-T1", "CI-T2", "CI-T3", "CR1", "CR2", "CR3", "SOUND", "Label")

SCHEMA_VERSION = "motor160kw/v1:" + ",".join(CHANNELS)


class ParseError(ValueError):
    """Malformed CSV input. ``row`` is 1-based over data rows (0 = header)."""

    def __init__(self, row: int, column: str, message: str):
        self.row = row
        self.column = column
        super().__init__(f"row {row}, column {column}: {message}")


class ConditionLabel(enum.IntEnum):
    H = 0
    B = 1
    PM = 2

    @property
    def long_name(self) -> str:
        return {0: "Healthy", 1: "Broken", 2: "Needs-PM"}[int(self)]

    @classmethod
    def parse(cls, token: str) -> "ConditionLabel":
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown label {token!r}") from None


class Sound(enum.Enum):
    NORMAL = "Normal"
    ABNORMAL = "ABN"

    @classmethod
    def parse(cls, token: str) -> "Sound":
        t = token.strip().upper()
        if t in ("NORMAL", "N"):
            return cls.NORMAL
        if t in ("ABN", "ABNORMAL"):
            return cls.ABNORMAL
        raise ValueError(f"unknown sound token {token!r}")


class OpenCircuit(enum.Enum):
    """Sentinel for a winding whose resistance reads as ``of``."""

    OF = "of"

    def __repr__(self) -> str:
        return "OpenCircuit.OF"


@dataclass(frozen=True)
class MotorReading:
    tep: float
    ci: tuple[float, float, float]
    cr: tuple  # each a float (ohms) or OpenCircuit.OF
    sound: Sound = Sound.NORMAL
    label: ConditionLabel | None = None

    def __post_init__(self):
        if not math.isfinite(self.tep):
            raise ValueError("tep must be finite")
        if len(self.ci) != 3 or len(self.cr) != 3:
            raise ValueError("ci and cr must have three phases")
        for c in self.ci:
            if not (math.isfinite(c) and c >= 0):
                raise ValueError(f"current must be finite and >= 0, got {c}")
        for r in self.cr:
            if r is OpenCircuit.OF:
                continue
            if not (math.isfinite(r) and r > 0):
                raise ValueError(f"resistance must be finite and > 0, got {r}")

    def is_open(self, phase: int) -> bool:
        return self.cr[phase] is OpenCircuit.OF


@dataclass(frozen=True)
class Dataset:
    readings: tuple[MotorReading, ...]

    def __post_init__(self):
        object.__setattr__(self, "readings", tuple(self.readings))
        flags = {r.label is not None for r in self.readings}
        if len(flags) > 1:
            raise ValueError("dataset mixes labeled and unlabeled readings")

    def __len__(self) -> int:
        return len(self.readings)

    def __iter__(self):
        return iter(self.readings)

    def __getitem__(self, i):
        return self.readings[i]

    @property
    def labeled(self) -> bool:
        return bool(self.readings) and self.readings[0].label is not None

    @property
    def labels(self) -> np.ndarray:
        if not self.labeled:
            raise ValueError("dataset is unlabeled")
        return np.array([int(r.label) for r in self.readings], dtype=np.int64)

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(tuple(self.readings[i] for i in indices))


# --------------------------------------------------------------------------
# CSV

def _parse_float(text: str, row: int, column: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(row, column, f"malformed number {text!r}") from None
    if not math.isfinite(v):
        raise ParseError(row, column, f"non-finite number {text!r}")
    return v


def _parse_row(fields: list[str], row: int, has_label: bool) -> MotorReading:
    expected = 9 if has_label else 8
    if len(fields) != expected:
        raise ParseError(row, "*", f"expected {expected} columns, got {len(fields)}")
    fields = [f.strip() for f in fields]
    tep = _parse_float(fields[0], row, HEADER[0])
    ci = tuple(_parse_float(fields[i], row, HEADER[i]) for i in (1, 2, 3))
    for i, c in zip((1, 2, 3), ci):
        if c < 0:
            raise ParseError(row, HEADER[i], f"negative current {c}")
    cr = []
    for i in (4, 5, 6):
        if fields[i].lower() == "of":
            cr.append(OpenCircuit.OF)
        else:
            r = _parse_float(fields[i], row, HEADER[i])
            if r <= 0:
                raise ParseError(row, HEADER[i], f"resistance must be > 0, got {r}")
            cr.append(r)
    try:
        sound = Sound.parse(fields[7])
    except ValueError as e:
        raise ParseError(row, "SOUND", str(e)) from None
    label = None
    if has_label:
        try:
            label = ConditionLabel.parse(fields[8])
        except ValueError as e:
            raise ParseError(row, "Label", str(e)) from None
    return MotorReading(tep, ci, tuple(cr), sound, label)


def parse_csv(stream: TextIO | str) -> Dataset:
    """Parse the motor CSV format. Accepts a text stream or a string."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    reader = csv.reader(stream)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError(0, "*", "missing header") from None
    if header == list(HEADER):
        has_label = True
    elif header == list(HEADER[:-1]):
        has_label = False
    else:
        raise ParseError(0, "*", f"unexpected header {','.join(header)}")
    readings = []
    for row, fields in enumerate(reader, start=1):
        if not fields or all(not f.strip() for f in fields):
            continue
        readings.append(_parse_row(fields, row, has_label))
    return Dataset(tuple(readings))


def parse_row(line: str, has_label: bool | None = None) -> MotorReading:
    """Parse a single headerless CSV row; label column optional."""
    fields = next(csv.reader([line]))
    if has_label is None:
        has_label = len(fields) == 9
    return _parse_row(fields, 1, has_label)


def _fmt(x: float) -> str:
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


def format_row(r: MotorReading, with_label: bool = True) -> list[str]:
    out = [_fmt(r.tep), *(_fmt(c) for c in r.ci)]
    out += ["of" if v is OpenCircuit.OF else _fmt(v) for v in r.cr]
    out.append(r.sound.value)
    if with_label:
        out.append(r.label.name)
    return out


def serialize_csv(d: Dataset, stream: TextIO | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    with_label = d.labeled
    w.writerow(HEADER if with_label else HEADER[:-1])
    for r in d:
        w.writerow(format_row(r, with_label))
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


# --------------------------------------------------------------------------
# Encoding

def encode_reading(r: MotorReading) -> np.ndarray:
    v = np.zeros(N_CHANNELS)
    v[TEP] = r.tep
    v[1:4] = r.ci
    for k in range(3):
        if r.cr[k] is OpenCircuit.OF:
            v[OPEN[k]] = 1.0
        else:
            v[CR[k]] = r.cr[k]
    v[SOUND] = 1.0 if r.sound is Sound.ABNORMAL else 0.0
    return v


def encode(d: Dataset | Sequence[MotorReading]) -> np.ndarray:
    readings = list(d)
    if not readings:
        return np.zeros((0, N_CHANNELS))
    return np.vstack([encode_reading(r) for r in readings])


# --------------------------------------------------------------------------
# Splitting

def largest_remainder(quotas: Sequence[float], total: int) -> np.ndarray:
    """Integer apportionment of ``total`` proportional to ``quotas``.

    Floors first, then hands the leftover units to the largest fractional
    parts (ties go to the lower index).
    """
    q = np.asarray(quotas, dtype=float)
    q = q * total / q.sum() if q.sum() > 0 else q
    base = np.floor(q + 1e-12).astype(np.int64)
    short = total - int(base.sum())
    rem = q - base
    order = sorted(range(len(q)), key=lambda i: (-rem[i], i))
    for i in order[:short]:
        base[i] += 1
    return base


def stratified_split_indices(labels: np.ndarray, test_fraction: float, seed: int,
                             n_classes: int = N_CLASSES):
    if not 0.0 < test_fraction < 1.0:
        raise ValueError("test_fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    counts = np.bincount(labels, minlength=n_classes)
    present = [c for c in range(n_classes) if counts[c] > 0]
    for c in present:
        if counts[c] < 2:
            raise ValueError(
                f"class {ConditionLabel(c).name} has {counts[c]} member; need >= 2")
    n_test = int(math.floor(len(labels) * test_fraction + 0.5))
    per_class = largest_remainder(counts * test_fraction, n_test)

    rng = np.random.default_rng(seed)
    train, test = [], []
    for c in range(n_classes):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(len(idx))]
        test.append(idx[:per_class[c]])
        train.append(idx[per_class[c]:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(d: Dataset, test_fraction: float = 0.2, seed: int = 42):
    """Split a labeled dataset into (train, test), class-stratified."""
    if not d.labeled:
        raise ValueError("stratified_split needs a labeled dataset")
    tr, te = stratified_split_indices(d.labels, test_fraction, seed)
    return d.subset(tr), d.subset(te)


# --------------------------------------------------------------------------
# Scaling

STD_FLOOR = 1e-12


@dataclass(frozen=True)
class ScalerParams:
    mean: np.ndarray
    std: np.ndarray


def fit_scaler(train: np.ndarray) -> ScalerParams:
    train = np.asarray(train, dtype=float)
    if train.shape[0] == 0:
        raise ValueError("cannot fit scaler on empty data")
    mean = train.mean(axis=0)
    std = np.maximum(train.std(axis=0), STD_FLOOR)
    return ScalerParams(mean, std)


def apply_scaler(p: ScalerParams, m: np.ndarray) -> np.ndarray:
    z = (np.asarray(m, dtype=float) - p.mean) / p.std
    # constant training channels carry no information
    z[:, p.std <= STD_FLOOR] = 0.0
    return z


# --------------------------------------------------------------------------
# Classifier contract

class Classifier(ABC):
    """Common fit / predict surface shared by every model in the toolkit.

    ``predict_proba`` returns an (n, 3) array whose rows sum to one;
    ``predict`` takes the argmax, lowest class index on ties.
    """

    @abstractmethod
    def fit(self, X: np.ndarray, y: np.ndarray) -> "Classifier":
        ...

    @abstractmethod
    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        ...

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(np.atleast_2d(X)), axis=1)
