"""Single-bit probing of a predictor around a seed solution.

For each variable the seed is flipped at that position only, and the
absolute change in the predictor's value is recorded.  The sign is negative
where the seed holds a 1 and positive where it holds a 0, so the signed
vector reads as "which value did the good solution settle on, and how much
does it matter".
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import Bitstring, as_bitstring

__all__ = [
    "ImportanceVector",
    "ProbeError",
    "ProbeReport",
    "ProbeRow",
    "block_sign_agreement",
    "mean_importance",
    "probe_solution",
    "rank_variables",
    "sign_alternation_rate",
]

Predictor = Callable[[Bitstring], float]


class ProbeError(RuntimeError):
    def __init__(self, index: int | None, cause: BaseException):
        self.index = index
        where = "seed solution" if index is None else f"variable {index}"
        super().__init__(f"predictor failed while probing {where}: {cause}")


@dataclass
class ImportanceVector:
    values: np.ndarray
    seed: Bitstring
    baseline: float
    flipped: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.seed.shape:
            raise ValueError("one importance value per seed bit required")

    def __len__(self) -> int:
        return self.values.size


def probe_solution(seed, predictor: Predictor) -> ImportanceVector:
    """Probe ``predictor`` at ``seed`` and at each single-bit flip of it.

    Makes exactly ``n + 1`` predictor calls, in order: the seed, then flips
    of bits ``0 .. n-1``.  Every flip is undone before the next probe.
    """
    seed = as_bitstring(seed).copy()
    try:
        baseline = float(predictor(seed.copy()))
    except Exception as exc:
        raise ProbeError(None, exc) from exc
    n = seed.size
    flipped = np.empty(n)
    x = seed.copy()
    for i in range(n):
        x[i] ^= 1
        try:
            flipped[i] = float(predictor(x.copy()))
        except Exception as exc:
            raise ProbeError(i, exc) from exc
        x[i] ^= 1
    magnitude = np.abs(baseline - flipped)
    values = np.where(seed == 1, -magnitude, magnitude)
    return ImportanceVector(values, seed, baseline, flipped)


def mean_importance(vectors: Sequence[ImportanceVector]) -> np.ndarray:
    if not vectors:
        raise ValueError("cannot average an empty list of importance vectors")
    n = len(vectors[0])
    if any(len(v) != n for v in vectors):
        raise ValueError("importance vectors differ in length")
    return np.mean([v.values for v in vectors], axis=0)


def rank_variables(importance) -> list[tuple[int, float]]:
    """``(index, |value|)`` by decreasing magnitude; ties keep index order."""
    mag = np.abs(np.asarray(importance, dtype=np.float64))
    order = np.argsort(-mag, kind="stable")
    return [(int(i), float(mag[i])) for i in order]


def sign_alternation_rate(importance) -> float:
    """Fraction of adjacent pairs whose importance signs are strictly opposite."""
    s = np.sign(np.asarray(importance, dtype=np.float64))
    if s.size < 2:
        raise ValueError("need at least two values")
    return float(np.mean(s[1:] * s[:-1] < 0))


def block_sign_agreement(importance, k: int) -> float:
    """Fraction of consecutive ``k``-blocks whose values all share one non-zero sign."""
    s = np.sign(np.asarray(importance, dtype=np.float64))
    if s.size % k:
        raise ValueError(f"block size {k} does not divide {s.size}")
    blocks = s.reshape(-1, k)
    uniform = np.all(blocks == blocks[:, :1], axis=1) & (blocks[:, 0] != 0)
    return float(np.mean(uniform))


@dataclass(frozen=True)
class ProbeRow:
    variable_index: int
    seed_bit: int
    baseline: float
    flipped_prediction: float
    importance: float


@dataclass
class ProbeReport:
    rows: list[ProbeRow]
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_importance(cls, vec: ImportanceVector, **metadata) -> "ProbeReport":
        if vec.flipped is None:
            raise ValueError("importance vector carries no flipped predictions")
        rows = [
            ProbeRow(i, int(vec.seed[i]), float(vec.baseline), float(vec.flipped[i]), float(vec.values[i]))
            for i in range(len(vec))
        ]
        return cls(rows, dict(metadata))

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def importance(self) -> np.ndarray:
        return np.array([r.importance for r in self.rows])

    @property
    def seed(self) -> Bitstring:
        return np.array([r.seed_bit for r in self.rows], dtype=np.uint8)
