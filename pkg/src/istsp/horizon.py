"""Cyclic time arithmetic and exact demand/supply vectors.

Time periods (TPs) are 1-based. Vectors store values in half units so that
supply contributions of 0.5 (half-TP tea breaks) stay exact integers.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

ALLOWED_OMEGAS = (5, 10, 15, 20, 30, 60)
MINUTES_PER_DAY = 1440


@dataclass(frozen=True)
class Horizon:
    """Planning horizon of ``T`` periods of ``omega`` minutes each."""

    T: int
    omega: int = 30
    cyclic: bool = True

    def __post_init__(self):
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if self.omega not in ALLOWED_OMEGAS:
            raise ValueError(f"omega must be one of {ALLOWED_OMEGAS}, got {self.omega}")

    @classmethod
    def weekly(cls, omega: int = 30) -> "Horizon":
        # omega=30 -> 336 TPs, omega=15 -> 672 TPs
        return cls(T=7 * MINUTES_PER_DAY // omega, omega=omega)

    @property
    def tps_per_day(self) -> int:
        return MINUTES_PER_DAY // self.omega

    @property
    def days(self) -> int:
        return self.T // self.tps_per_day

    def wrap(self, j: int) -> int:
        return wrap(j, self.T) if self.cyclic else j

    def hours(self, tps) -> float:
        """Convert a TP count (or TP-weighted sum) to hours."""
        return float(tps) * self.omega / 60


def wrap(j: int, T: int) -> int:
    """Map any integer onto ``[1, T]`` with wrap(0) == T and wrap(T + 1) == 1."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return (j - 1) % T + 1


def _to_halves(values: Iterable) -> np.ndarray:
    out = []
    for v in values:
        h = Fraction(v) * 2
        if h.denominator != 1:
            raise ValueError(f"value {v} is not a multiple of 0.5")
        out.append(int(h))
    return np.asarray(out, dtype=np.int64)


class PeriodVector:
    """Nonnegative per-TP vector with exact half-integer entries.

    ``halves[j - 1]`` holds twice the value at TP ``j``.
    """

    __slots__ = ("halves",)

    def __init__(self, halves):
        arr = np.array(halves, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("PeriodVector must be one-dimensional")
        if (arr < 0).any():
            raise ValueError("PeriodVector entries must be nonnegative")
        arr.flags.writeable = False
        self.halves = arr

    @classmethod
    def from_values(cls, values: Iterable) -> "PeriodVector":
        return cls(_to_halves(values))

    @classmethod
    def zeros(cls, T: int) -> "PeriodVector":
        return cls(np.zeros(T, dtype=np.int64))

    def __len__(self) -> int:
        return len(self.halves)

    def at(self, j: int) -> float:
        """Value at 1-based TP ``j``."""
        return self.halves[j - 1] / 2

    @property
    def values(self) -> np.ndarray:
        return self.halves / 2

    @property
    def is_integral(self) -> bool:
        return bool((self.halves % 2 == 0).all())

    def as_ints(self) -> np.ndarray:
        if not self.is_integral:
            raise ValueError("vector has half-integer entries")
        return self.halves // 2

    def total(self) -> Fraction:
        return Fraction(int(self.halves.sum()), 2)

    def peak(self) -> Fraction:
        return Fraction(int(self.halves.max()) if len(self) else 0, 2)

    def to_list(self) -> list:
        return [int(h // 2) if h % 2 == 0 else h / 2 for h in self.halves.tolist()]

    def __add__(self, other: "PeriodVector") -> "PeriodVector":
        return add_scaled(self, other, 1)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PeriodVector):
            return NotImplemented
        return np.array_equal(self.halves, other.halves)

    def __hash__(self):
        return hash(self.halves.tobytes())

    def __repr__(self) -> str:
        vals = self.to_list()
        head = vals if len(vals) <= 12 else vals[:12] + ["..."]
        return f"PeriodVector(T={len(vals)}, {head})"


def _check_same_length(a: PeriodVector, b: PeriodVector):
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} != {len(b)}")


def add_scaled(a: PeriodVector, b: PeriodVector, m: int) -> PeriodVector:
    """Return ``a + m * b`` coordinatewise."""
    _check_same_length(a, b)
    if m < 0:
        raise ValueError("m must be nonnegative")
    return PeriodVector(a.halves + m * b.halves)


def dominates(supply: PeriodVector, demand: PeriodVector) -> bool:
    _check_same_length(supply, demand)
    return bool((supply.halves >= demand.halves).all())


def as_vector(values: Sequence | PeriodVector) -> PeriodVector:
    if isinstance(values, PeriodVector):
        return values
    return PeriodVector.from_values(values)
