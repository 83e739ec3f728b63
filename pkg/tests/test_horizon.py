from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from istsp.horizon import Horizon, PeriodVector, add_scaled, as_vector, dominates, wrap


def test_weekly_horizons():
    assert Horizon.weekly(30).T == 336
    assert Horizon.weekly(15).T == 672
    h = Horizon.weekly(15)
    assert h.tps_per_day == 96 and h.days == 7
    assert h.hours(4) == 1.0


def test_horizon_rejects_bad_inputs():
    with pytest.raises(ValueError):
        Horizon(0)
    with pytest.raises(ValueError):
        Horizon(10, omega=7)


@pytest.mark.parametrize("j,T,expected", [(1, 5, 1), (5, 5, 5), (6, 5, 1), (0, 5, 5), (-1, 5, 4), (11, 5, 1)])
def test_wrap_examples(j, T, expected):
    assert wrap(j, T) == expected


@given(st.integers(-10_000, 10_000), st.integers(1, 700))
def test_wrap_lands_in_range_and_is_periodic(j, T):
    w = wrap(j, T)
    assert 1 <= w <= T
    assert wrap(j + T, T) == w
    assert (w - j) % T == 0


def test_linear_horizon_does_not_wrap():
    assert Horizon(10, cyclic=False).wrap(12) == 12
    assert Horizon(10).wrap(12) == 2


def test_period_vector_half_values_are_exact():
    v = PeriodVector.from_values([0, 0.5, 1, 2.5])
    assert v.halves.tolist() == [0, 1, 2, 5]
    assert v.total() == Fraction(4)
    assert v.peak() == Fraction(5, 2)
    assert not v.is_integral
    assert v.at(2) == 0.5
    assert v.to_list() == [0, 0.5, 1, 2.5]
    with pytest.raises(ValueError):
        v.as_ints()


def test_period_vector_rejects_bad_values():
    with pytest.raises(ValueError):
        PeriodVector.from_values([0.25])
    with pytest.raises(ValueError):
        PeriodVector.from_values([-1])
    with pytest.raises(ValueError):
        PeriodVector(np.zeros((2, 2)))


def test_vectors_are_immutable():
    v = PeriodVector.from_values([1, 2])
    with pytest.raises(ValueError):
        v.halves[0] = 5


vectors = st.lists(st.integers(0, 60), min_size=1, max_size=40)


@given(vectors, st.integers(0, 5))
def test_add_scaled_matches_elementwise(vals, m):
    a = PeriodVector(vals)
    b = PeriodVector(vals[::-1])
    c = add_scaled(a, b, m)
    assert c.halves.tolist() == [x + m * y for x, y in zip(vals, vals[::-1])]
    assert dominates(c, a)


def test_dominates_and_length_checks():
    a, b = as_vector([1, 2]), as_vector([1, 1])
    assert dominates(a, b) and not dominates(b, a)
    assert as_vector(a) is a
    with pytest.raises(ValueError):
        dominates(a, as_vector([1]))
    with pytest.raises(ValueError):
        add_scaled(a, b, -1)
    assert a + b == as_vector([2, 3])
    assert hash(a) == hash(as_vector([1, 2]))
