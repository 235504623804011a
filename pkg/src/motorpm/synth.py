"""Synthetic labeled motor readings with known class rules.

Values are anchored to the exemplar rows (280 A phase currents,
1.4 ohm windings, 39-100 C temperatures). They are synthetic and make no
claim to match any real plant's marginals.

Class rules before label noise:

* H  -- tep ~ U[38, 70], currents ~ N(280, 8), windings ~ N(1.4, 0.05),
  normal sound.
* B  -- the motor is not running: all three currents ~ U[0, 0.5]; with
  probability 0.6 one winding is also faulty (open circuit 60 %, or a
  reading above 100 ohm 40 %). tep ~ U[30, 110], sound either way.
* PM -- electrics as H, but hot (tep ~ U[85, 115]), abnormal sound, or
  both, with probabilities 0.4 / 0.4 / 0.2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from motorpm.data import (
    ConditionLabel,
    Dataset,
    MotorReading,
    OpenCircuit,
    Sound,
    largest_remainder,
)

DEFAULT_MIX = (0.36, 0.34, 0.30)


@dataclass(frozen=True)
class GeneratorConfig:
    n: int = 1050
    seed: int = 42
    class_mix: tuple[float, float, float] = DEFAULT_MIX
    label_noise: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")
        mix = tuple(float(m) for m in self.class_mix)
        if len(mix) != 3 or min(mix) < 0 or abs(sum(mix) - 1.0) > 1e-9:
            raise ValueError("class_mix must be 3 nonnegative reals summing to 1")
        object.__setattr__(self, "class_mix", mix)
        if not 0.0 <= self.label_noise < 0.5:
            raise ValueError("label_noise must lie in [0, 0.5)")


def _healthy_electrics(rng):
    ci = np.clip(rng.normal(280.0, 8.0, 3), 0.0, None)
    cr = np.clip(rng.normal(1.4, 0.05, 3), 1e-3, None)
    return tuple(round(float(c), 1) for c in ci), tuple(round(float(r), 3) for r in cr)


def _healthy(rng):
    tep = round(float(rng.uniform(38.0, 70.0)), 1)
    ci, cr = _healthy_electrics(rng)
    return tep, ci, cr, Sound.NORMAL


def _broken(rng):
    tep = round(float(rng.uniform(30.0, 110.0)), 1)
    ci = tuple(round(float(c), 2) for c in rng.uniform(0.0, 0.5, 3))
    cr = [round(float(r), 3) for r in np.clip(rng.normal(1.4, 0.05, 3), 1e-3, None)]
    if rng.random() < 0.6:
        coil = int(rng.integers(3))
        if rng.random() < 0.6:
            cr[coil] = OpenCircuit.OF
        else:
            cr[coil] = round(float(rng.uniform(150.0, 2000.0)), 1)
    sound = Sound.ABNORMAL if rng.random() < 0.5 else Sound.NORMAL
    return tep, ci, tuple(cr), sound


def _needs_pm(rng):
    ci, cr = _healthy_electrics(rng)
    mode = rng.choice(3, p=[0.4, 0.4, 0.2])
    hot = mode in (0, 2)
    noisy = mode in (1, 2)
    tep = rng.uniform(85.0, 115.0) if hot else rng.uniform(38.0, 70.0)
    return round(float(tep), 1), ci, cr, Sound.ABNORMAL if noisy else Sound.NORMAL


_RULES = {ConditionLabel.H: _healthy, ConditionLabel.B: _broken, ConditionLabel.PM: _needs_pm}


def generate(cfg: GeneratorConfig) -> Dataset:
    """Draw ``cfg.n`` labeled readings. Pure function of ``cfg``."""
    rng = np.random.default_rng(cfg.seed)
    counts = largest_remainder(cfg.class_mix, cfg.n)
    labels = np.repeat(np.arange(3), counts)
    labels = labels[rng.permutation(cfg.n)]

    rows = []
    for c in labels:
        label = ConditionLabel(int(c))
        tep, ci, cr, sound = _RULES[label](rng)
        rows.append([tep, ci, cr, sound, label])

    n_noisy = int(round(cfg.label_noise * cfg.n))
    if n_noisy:
        for i in rng.choice(cfg.n, size=n_noisy, replace=False):
            shift = int(rng.integers(1, 3))
            rows[i][4] = ConditionLabel((int(rows[i][4]) + shift) % 3)

    return Dataset(tuple(MotorReading(*r) for r in rows))
