"""Closed-interval arithmetic for enclosures, feasibility tests and tightening.

All intervals are closed ``[lo, hi]`` with ``lo <= hi``; a singleton has
``lo == hi``.  Arithmetic uses ordinary float rounding: results are inclusion
monotone (shrinking the inputs never widens the output), which is what the
nested-refinement guarantees rely on.
"""

from __future__ import annotations

import math
from typing import NamedTuple


class Interval(NamedTuple):
    lo: float
    hi: float

    @staticmethod
    def point(x: float) -> "Interval":
        return Interval(x, x)

    @staticmethod
    def make(lo: float, hi: float) -> "Interval":
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"non-finite interval [{lo}, {hi}]")
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        return Interval(lo, hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def is_singleton(self) -> bool:
        return self.lo == self.hi

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= x <= self.hi + tol

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def clamp(self, x: float) -> float:
        return min(max(x, self.lo), self.hi)

    def __add__(self, other):  # type: ignore[override]
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __sub__(self, other):
        return Interval(self.lo - other.hi, self.hi - other.lo)

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __mul__(self, other):  # type: ignore[override]
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return Interval(min(products), max(products))

    def scale(self, c: float) -> "Interval":
        if c >= 0:
            return Interval(c * self.lo, c * self.hi)
        return Interval(c * self.hi, c * self.lo)

    def shift(self, c: float) -> "Interval":
        return Interval(self.lo + c, self.hi + c)


def intersect(a: Interval, b: Interval) -> Interval | None:
    """Intersection, or ``None`` when disjoint."""
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    return Interval(lo, hi) if lo <= hi else None


def intersect_all(intervals) -> Interval | None:
    lo = max(v.lo for v in intervals)
    hi = min(v.hi for v in intervals)
    return Interval(lo, hi) if lo <= hi else None


def hull(a: Interval, b: Interval) -> Interval:
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def sum_intervals(intervals) -> Interval:
    lo = 0.0
    hi = 0.0
    for v in intervals:
        lo += v.lo
        hi += v.hi
    return Interval(lo, hi)


def abs_interval(a: Interval) -> Interval:
    """Range of ``|x|`` over the interval."""
    if a.lo >= 0:
        return a
    if a.hi <= 0:
        return -a
    return Interval(0.0, max(-a.lo, a.hi))


def square(a: Interval) -> Interval:
    m = abs_interval(a)
    return Interval(m.lo * m.lo, m.hi * m.hi)


def divide(a: Interval, b: Interval) -> Interval | None:
    """``a / b`` when ``0 not in b``; ``None`` signals an unbounded quotient."""
    if b.lo <= 0.0 <= b.hi:
        return None
    inv = Interval(1.0 / b.hi, 1.0 / b.lo)
    return a * inv


def signed_sqrt(x: float) -> float:
    """Odd continuous extension ``sign(x) * sqrt(|x|)`` with value 0 at 0."""
    if x == 0.0:
        return 0.0
    return math.copysign(math.sqrt(abs(x)), x)


def signed_sqrt_interval(a: Interval) -> Interval:
    # monotone increasing map, endpoint evaluation is exact
    return Interval(signed_sqrt(a.lo), signed_sqrt(a.hi))


def signed_square(x: float) -> float:
    """Inverse of :func:`signed_sqrt`."""
    return math.copysign(x * x, x)
