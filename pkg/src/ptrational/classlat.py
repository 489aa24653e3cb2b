"""Curve classes on a lattice model Z^r with the coordinate cone as effective cone."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Callable, Sequence

from .errors import InputError


@dataclass(frozen=True, order=True, slots=True)
class CurveClass:
    """A pair (beta, n) of a curve class and an Euler characteristic."""

    beta: tuple[int, ...]
    n: int

    def __add__(self, other: "CurveClass") -> "CurveClass":
        return CurveClass(add_beta(self.beta, other.beta), self.n + other.n)


@dataclass(frozen=True, order=True, slots=True)
class KClass:
    """A class (d, beta, n) in the pair category; d is the pair rank."""

    d: int
    beta: tuple[int, ...]
    n: int

    def __add__(self, other: "KClass") -> "KClass":
        return KClass(self.d + other.d, add_beta(self.beta, other.beta), self.n + other.n)

    @property
    def curve(self) -> CurveClass:
        return CurveClass(self.beta, self.n)

    def __str__(self):
        return f"({self.d},{list(self.beta)},{self.n})"


def add_beta(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    if len(a) != len(b):
        raise InputError(f"class dimension mismatch: {len(a)} vs {len(b)}")
    return tuple(x + y for x, y in zip(a, b))


def sub_beta(a: Sequence[int], b: Sequence[int]) -> tuple[int, ...]:
    return tuple(x - y for x, y in zip(a, b))


def class_sum(items):
    it = iter(items)
    total = next(it)
    for x in it:
        total = total + x
    return total


@dataclass(frozen=True)
class GeometryModel:
    """Numerical data of the threefold model.

    ``euler_override``, when given, replaces the default symmetrized Euler
    pairing; it must be symmetric and biadditive on KClass pairs.
    """

    rank: int
    c1: tuple[int, ...]
    omega: tuple[Fraction, ...]
    ample_L: tuple[int, ...]
    euler_override: Callable[[KClass, KClass], int] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.rank, int) or self.rank < 1:
            raise InputError("rank must be a positive integer", "geometry.rank")
        object.__setattr__(self, "c1", tuple(int(x) for x in self.c1))
        object.__setattr__(self, "omega", tuple(Fraction(x) for x in self.omega))
        object.__setattr__(self, "ample_L", tuple(int(x) for x in self.ample_L))
        for name in ("c1", "omega", "ample_L"):
            if len(getattr(self, name)) != self.rank:
                raise InputError(f"expected {self.rank} components", f"geometry.{name}")
        if any(w <= 0 for w in self.omega):
            raise InputError("omega components must be positive", "geometry.omega")
        if any(x <= 0 for x in self.ample_L):
            raise InputError("ample_L components must be positive", "geometry.ample_L")

    def check(self, beta: Sequence[int]) -> tuple[int, ...]:
        beta = tuple(beta)
        if len(beta) != self.rank:
            raise InputError(f"class {list(beta)} has length {len(beta)}, geometry rank is {self.rank}")
        return beta

    def c1_dot(self, beta: Sequence[int]) -> int:
        return sum(a * b for a, b in zip(self.c1, self.check(beta)))

    def omega_dot(self, beta: Sequence[int], omega: Sequence[Fraction] | None = None) -> Fraction:
        w = self.omega if omega is None else omega
        return sum((Fraction(a) * b for a, b in zip(w, self.check(beta))), Fraction(0))

    def degree(self, beta: Sequence[int]) -> int:
        """d_beta, the pairing of beta with the ample class L."""
        return sum(a * b for a, b in zip(self.ample_L, self.check(beta)))

    def zero(self) -> tuple[int, ...]:
        return (0,) * self.rank


def is_effective(beta: Sequence[int], geometry: GeometryModel) -> bool:
    beta = geometry.check(beta)
    return all(x >= 0 for x in beta) and any(beta)


def _require_effective(beta, geometry) -> tuple[int, ...]:
    beta = geometry.check(beta)
    if not is_effective(beta, geometry):
        raise InputError(f"class {list(beta)} is not effective")
    return beta


def factors(beta: Sequence[int], geometry: GeometryModel) -> tuple[tuple[int, ...], ...]:
    """All effective gamma with beta - gamma effective or zero, in sorted order."""
    beta = _require_effective(beta, geometry)
    out = [g for g in product(*(range(x + 1) for x in beta)) if any(g)]
    return tuple(sorted(out))


def is_positive(beta: Sequence[int], geometry: GeometryModel) -> bool:
    beta = _require_effective(beta, geometry)
    return geometry.c1_dot(beta) > 0


def is_superpositive(beta: Sequence[int], geometry: GeometryModel) -> bool:
    return all(is_positive(g, geometry) for g in factors(beta, geometry))


def split_count(beta: Sequence[int], geometry: GeometryModel) -> int:
    """Largest number of effective summands beta can be split into."""
    return sum(_require_effective(beta, geometry))


def euler_sym(a: KClass, b: KClass, geometry: GeometryModel) -> int:
    """chi(a, b) + chi(b, a); depends only on (d, beta) of the two classes."""
    geometry.check(a.beta)
    geometry.check(b.beta)
    if geometry.euler_override is not None:
        return int(geometry.euler_override(a, b))
    return -(a.d * geometry.c1_dot(b.beta) + b.d * geometry.c1_dot(a.beta))


def euler_split(a: KClass, b: KClass, geometry: GeometryModel) -> int:
    """An unsymmetrized Euler form whose symmetrization is the default pairing.

    Only its parity is used, as the sign of the vertex operation.
    """
    return -a.d * geometry.c1_dot(b.beta)


def ordered_decompositions(beta: Sequence[int], k: int, allow_zero_at: int | None = None):
    """Ordered k-tuples of nonnegative vectors summing to beta.

    Every entry is nonzero except possibly the one at index ``allow_zero_at``.
    """
    beta = tuple(beta)
    r = len(beta)

    def rec(i: int, remaining: tuple[int, ...]):
        if i == k - 1:
            if any(remaining) or i == allow_zero_at:
                yield (remaining,)
            return
        for part in product(*(range(x + 1) for x in remaining)):
            if not any(part) and i != allow_zero_at:
                continue
            rest = tuple(x - y for x, y in zip(remaining, part))
            for tail in rec(i + 1, rest):
                yield (part,) + tail

    if k == 0:
        return
    yield from rec(0, beta)
