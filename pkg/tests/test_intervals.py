import math
import random

import pytest

from pcnf.intervals import (
    Interval,
    abs_interval,
    divide,
    hull,
    intersect,
    intersect_all,
    signed_sqrt,
    signed_sqrt_interval,
    signed_square,
    square,
    sum_intervals,
)


def test_make_rejects_bad_intervals():
    with pytest.raises(ValueError):
        Interval.make(2.0, 1.0)
    with pytest.raises(ValueError):
        Interval.make(0.0, math.inf)


def test_basic_arithmetic():
    a = Interval(1.0, 2.0)
    b = Interval(-1.0, 3.0)
    assert a + b == Interval(0.0, 5.0)
    assert a - b == Interval(-2.0, 3.0)
    assert -a == Interval(-2.0, -1.0)
    assert a.scale(-2.0) == Interval(-4.0, -2.0)
    assert a.shift(10.0) == Interval(11.0, 12.0)


def test_mul_and_square_cover_samples():
    rng = random.Random(0)
    for _ in range(300):
        a = Interval(*sorted(rng.uniform(-5, 5) for _ in range(2)))
        b = Interval(*sorted(rng.uniform(-5, 5) for _ in range(2)))
        prod = a * b
        sq = square(a)
        for _ in range(10):
            x = rng.uniform(a.lo, a.hi)
            y = rng.uniform(b.lo, b.hi)
            assert prod.lo - 1e-12 <= x * y <= prod.hi + 1e-12
            assert sq.lo - 1e-12 <= x * x <= sq.hi + 1e-12


def test_intersect_and_hull():
    assert intersect(Interval(0, 2), Interval(1, 3)) == Interval(1, 2)
    assert intersect(Interval(0, 1), Interval(2, 3)) is None
    assert intersect(Interval(0, 1), Interval(1, 2)) == Interval(1, 1)
    assert hull(Interval(0, 1), Interval(3, 4)) == Interval(0, 4)
    assert intersect_all([Interval(0, 5), Interval(1, 4), Interval(2, 6)]) == Interval(2, 4)
    assert intersect_all([Interval(0, 1), Interval(2, 3)]) is None


def test_sum_and_abs():
    assert sum_intervals([Interval(0, 1), Interval(-2, 3)]) == Interval(-2, 4)
    assert abs_interval(Interval(-3, 1)) == Interval(0, 3)
    assert abs_interval(Interval(2, 5)) == Interval(2, 5)
    assert abs_interval(Interval(-5, -2)) == Interval(2, 5)


def test_divide_guards_zero():
    assert divide(Interval(1, 2), Interval(-1, 1)) is None
    q = divide(Interval(2, 4), Interval(1, 2))
    assert q == Interval(1.0, 4.0)


def test_signed_sqrt_is_odd_and_monotone():
    assert signed_sqrt(0.0) == 0.0
    assert signed_sqrt(4.0) == 2.0
    assert signed_sqrt(-4.0) == -2.0
    xs = [-9.0, -1.0, -0.25, 0.0, 0.25, 1.0, 9.0]
    vals = [signed_sqrt(x) for x in xs]
    assert vals == sorted(vals)
    for x in xs:
        assert signed_square(signed_sqrt(x)) == pytest.approx(x)


def test_signed_sqrt_interval_endpoints():
    assert signed_sqrt_interval(Interval(-4.0, 4.0)) == Interval(-2.0, 2.0)
