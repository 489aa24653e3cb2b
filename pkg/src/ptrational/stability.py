"""Slope functions, pair stability and a sample-based seesaw checker."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Sequence, Union

from .classlat import CurveClass, GeometryModel, KClass, is_effective
from .errors import InputError


class _PositiveInfinity:
    """The +infinity marker of the extended rationals; compares above every Fraction."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("ptrational.INF")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __reduce__(self):
        return (_PositiveInfinity, ())


INF = _PositiveInfinity()
ExtendedRational = Union[Fraction, _PositiveInfinity]


def ext_text(x: ExtendedRational) -> str:
    if x is INF:
        return "inf"
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def slope_mu(cc: CurveClass, geometry: GeometryModel, omega: Sequence[Fraction] | None = None) -> ExtendedRational:
    """n / (omega . beta), or +inf for zero-dimensional classes."""
    beta = geometry.check(cc.beta)
    if not any(beta):
        if cc.n > 0:
            return INF
        raise InputError(f"class {cc} is outside the positive cone")
    if not is_effective(beta, geometry):
        raise InputError(f"class {cc} is outside the positive cone")
    return Fraction(cc.n) / geometry.omega_dot(beta, omega)


@dataclass(frozen=True)
class PairStability:
    """Pair slope with constant value c on classes of positive pair rank."""

    c: Fraction
    omega: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))


def pair_slope(kc: KClass, ps: PairStability, geometry: GeometryModel) -> ExtendedRational:
    if kc.d > 0:
        return ps.c
    if kc.d < 0:
        raise InputError(f"class {kc} has negative pair rank")
    return slope_mu(kc.curve, geometry, ps.omega)


@dataclass(frozen=True)
class SlopeCondition:
    """The slope function for a Kähler vector, as a callable on classes.

    Accepts CurveClass, or KClass with d = 0.
    """

    geometry: GeometryModel
    omega: tuple[Fraction, ...] | None = None

    def __call__(self, cls) -> ExtendedRational:
        if isinstance(cls, KClass):
            if cls.d != 0:
                raise InputError(f"slope function applied to pair class {cls}")
            cls = cls.curve
        return slope_mu(cls, self.geometry, self.omega)


@dataclass(frozen=True)
class PairCondition:
    """The pair slope function with constant c, as a callable on KClass."""

    geometry: GeometryModel
    c: Fraction
    omega: tuple[Fraction, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "c", Fraction(self.c))

    def __call__(self, kc: KClass) -> ExtendedRational:
        return pair_slope(kc, PairStability(self.c, self.omega), self.geometry)


def check_weak_stability(tau: Callable, cone_sample: Iterable):
    """Check the seesaw property on every pair drawn from ``cone_sample``.

    Returns ``(True, None)`` or ``(False, (alpha, alpha + gamma, gamma))`` for
    the first violating splitting found.
    """
    sample = list(cone_sample)
    values = {x: tau(x) for x in sample}
    for a in sample:
        for g in sample:
            b = a + g
            tb = values[b] if b in values else tau(b)
            ta, tg = values[a], values[g]
            if not ((ta <= tb <= tg) or (ta >= tb >= tg)):
                return False, (a, b, g)
    return True, None


def curve_class_box(geometry: GeometryModel, max_degree: Fraction | int, max_abs_n: int) -> list[CurveClass]:
    """Classes in the positive cone with omega.beta <= max_degree and |n| <= max_abs_n."""
    w = geometry.omega
    bounds = [int(Fraction(max_degree) / wi) for wi in w]
    out = []
    for beta in product(*(range(b + 1) for b in bounds)):
        if any(beta) and geometry.omega_dot(beta) > max_degree:
            continue
        for n in range(-max_abs_n, max_abs_n + 1):
            if not any(beta) and n <= 0:
                continue
            out.append(CurveClass(tuple(beta), n))
    return out
