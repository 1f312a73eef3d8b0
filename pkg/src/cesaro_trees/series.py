"""Partial sums with integral-test tail enclosures."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __add__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo + other.lo, self.hi + other.hi)
        return Interval(self.lo + other, self.hi + other)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Interval):
            return Interval(self.lo - other.hi, self.hi - other.lo)
        return Interval(self.lo - other, self.hi - other)

    def scale(self, c: float) -> "Interval":
        a, b = c * self.lo, c * self.hi
        return Interval(min(a, b), max(a, b))

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "mid": self.mid}


def inverse_square_tail(M: int) -> Interval:
    """Enclosure of sum_{m > M} 1/m^2, namely (1/(M+1), 1/M), for M >= 1."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return Interval(1.0 / (M + 1), 1.0 / M)


def inverse_square_sum(first: int, last: int) -> float:
    """sum_{m=first}^{last} 1/m^2 accumulated in increasing m."""
    if last < first:
        return 0.0
    m = np.arange(first, last + 1, dtype=np.float64)
    return float(np.cumsum(1.0 / (m * m))[-1])


def inverse_square_series(first: int, cap: int = 10**6) -> Interval:
    """sum_{m >= first} 1/m^2: explicit terms up to ``first + cap`` plus tail enclosure."""
    last = first + cap
    return inverse_square_tail(last) + inverse_square_sum(first, last)


def zeta2_tail_closed(first: int) -> float:
    """pi^2/6 - sum_{m < first} 1/m^2, for cross-checks at small ``first``."""
    return math.pi ** 2 / 6 - sum(1.0 / (m * m) for m in range(1, first))
