from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ptrational.classlat import CurveClass, KClass
from ptrational.errors import InputError
from ptrational.stability import (
    INF,
    PairCondition,
    SlopeCondition,
    check_weak_stability,
    curve_class_box,
    slope_mu,
)


def test_slope_is_n_over_degree(rank2):
    assert slope_mu(CurveClass((1, 1), 6), rank2) == 2
    assert slope_mu(CurveClass((1, 1), 6), rank2, (Fraction(2), Fraction(1))) == 2


def test_points_have_infinite_slope(rank2):
    assert slope_mu(CurveClass((0, 0), 3), rank2) is INF
    assert INF > Fraction(10 ** 9)
    with pytest.raises(InputError):
        slope_mu(CurveClass((0, 0), 0), rank2)


def test_pair_slope_is_constant_on_pair_classes(rank2):
    tau = PairCondition(rank2, Fraction(5, 2))
    assert tau(KClass(1, (1, 0), -40)) == Fraction(5, 2)
    assert tau(KClass(0, (1, 0), 2)) == 2


def test_slope_condition_refuses_pair_classes(rank2):
    with pytest.raises(InputError):
        SlopeCondition(rank2)(KClass(1, (1, 0), 0))


@pytest.mark.parametrize("omega", [(1, 2), (3, 1), (1, 1)])
def test_slope_conditions_satisfy_seesaw(rank2, omega):
    box = curve_class_box(rank2, 4, 3)
    ok, witness = check_weak_stability(SlopeCondition(rank2, tuple(map(Fraction, omega))), box)
    assert ok, witness


@given(st.fractions(min_value=-5, max_value=5, max_denominator=6))
def test_pair_conditions_satisfy_seesaw(rank1, c):
    tau = PairCondition(rank1, c)
    sample = [KClass(d, (b,), n) for d in (0, 1) for b in range(0, 3) for n in range(-2, 3)
              if (b or d or n > 0)]
    ok, witness = check_weak_stability(tau, sample)
    assert ok, witness


def test_seesaw_checker_reports_a_violation(rank1):
    def bad(cls):
        return Fraction(cls.beta[0] ** 2 + cls.n)

    ok, witness = check_weak_stability(bad, curve_class_box(rank1, 2, 1))
    assert not ok and witness is not None
