"""Rational generating functions of eventually quasi-polynomial sequences.

A :class:`RationalGF` is a finite Laurent prefix plus terms
``q^j * Q(q^d) / (1 - q^d)^e``.  Expansions are in increasing powers of q
(powers bounded below).  Coefficients may be Fractions or :class:`Vec`
module elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, gcd
from typing import Callable, Mapping

from .errors import InputError
from .exact import Vec, divisors, fraction_text, is_zero, lcm, poly_eval, zero_like
from .quasipoly import QuasiPoly


@dataclass(frozen=True)
class GFTerm:
    """q^shift * sum_i numerator[i] x^i / (1 - x)^exponent with x = q^period."""

    shift: int
    numerator: tuple  # ((power of x, coefficient), ...) sorted, nonzero
    period: int
    exponent: int

    def __post_init__(self):
        if self.period < 1 or self.exponent < 0:
            raise InputError("term needs period >= 1 and exponent >= 0")
        items = dict(self.numerator)
        object.__setattr__(self, "numerator", tuple(sorted((p, c) for p, c in items.items() if not is_zero(c))))

    def coefficient(self, n: int):
        """Coefficient of q^n."""
        m, r = divmod(n - self.shift, self.period)
        if r:
            return None
        acc = None
        e = self.exponent
        for p, c in self.numerator:
            k = m - p
            if k < 0:
                continue
            mult = comb(k + e - 1, e - 1) if e else (1 if k == 0 else 0)
            if mult:
                acc = c * mult if acc is None else acc + c * mult
        return acc

    def lowest_power(self) -> int | None:
        if not self.numerator:
            return None
        return self.shift + self.period * self.numerator[0][0]


class RationalGF:
    """Finite Laurent prefix plus a list of :class:`GFTerm`."""

    def __init__(self, prefix: Mapping[int, object] | None = None, terms=()):
        self.prefix = {int(n): v for n, v in (prefix or {}).items() if not is_zero(v)}
        self.terms = tuple(t for t in terms if t.numerator)

    def __add__(self, other: "RationalGF") -> "RationalGF":
        prefix = dict(self.prefix)
        for n, v in other.prefix.items():
            prefix[n] = prefix[n] + v if n in prefix else v
        return RationalGF(prefix, self.terms + other.terms)

    def map_coeffs(self, fn: Callable) -> "RationalGF":
        return RationalGF(
            {n: fn(v) for n, v in self.prefix.items()},
            [GFTerm(t.shift, tuple((p, fn(c)) for p, c in t.numerator), t.period, t.exponent) for t in self.terms],
        )

    def lowest_power(self) -> int | None:
        lows = [n for n in self.prefix] + [t.lowest_power() for t in self.terms]
        lows = [x for x in lows if x is not None]
        return min(lows) if lows else None

    def is_zero(self) -> bool:
        return not normalize(self)[3]

    def text(self, key_text=str) -> str:
        return normalized_text(self, key_text)

    def __repr__(self):
        return f"RationalGF({self.text()})"


# ----------------------------------------------------------------------------
# construction


def _tail_numerator(values: list) -> tuple:
    """Numerator of sum_m p(m) x^m = Q(x) / (1 - x)^(g + 1) from p(0..g)."""
    g = len(values) - 1
    out = []
    for i in range(g + 1):
        acc = 0
        for t in range(i + 1):
            sign = -1 if t % 2 else 1
            acc = acc + values[i - t] * (sign * comb(g + 1, t))
        out.append((i, acc))
    return tuple(out)


def qp_tail_to_gf(M: int, exceptional: Mapping[int, object], tail: QuasiPoly, N: int) -> RationalGF:
    """Generating function of the sequence that vanishes for n <= M, takes the
    ``exceptional`` values on M < n < N, and follows ``tail`` for n >= N."""
    if tail.nvars != 1:
        raise InputError("tail must be a one-variable quasi-polynomial")
    if M >= N:
        raise InputError(f"vanishing bound {M} must lie below tail start {N}")
    for n in exceptional:
        if not M < n < N:
            raise InputError(f"exceptional value at n={n} lies outside ({M}, {N})")
    d = tail.period
    terms = []
    for j in range(N, N + d):
        poly = tail.branch(j)
        if not poly:
            continue
        g = len(poly) - 1
        samples = [poly_eval(poly, j + d * m) for m in range(g + 1)]
        terms.append(GFTerm(j, _tail_numerator(samples), d, g + 1))
    return RationalGF(dict(exceptional), terms)


# ----------------------------------------------------------------------------
# expansion


def gf_coefficient(F: RationalGF, n: int):
    acc = F.prefix.get(n)
    for t in F.terms:
        c = t.coefficient(n)
        if c is not None:
            acc = c if acc is None else acc + c
    return acc


def gf_expand(F: RationalGF, n_max: int, n_min: int | None = None) -> dict[int, object]:
    """Coefficients of q^n for n_min <= n <= n_max.

    ``n_min`` defaults to the lowest power that can carry a nonzero
    coefficient.  Missing values are reported as exact zeros.
    """
    low = F.lowest_power()
    if n_min is None:
        n_min = low if low is not None else 0
    zero = _zero_for(F)
    out = {}
    for n in range(n_min, n_max + 1):
        c = gf_coefficient(F, n)
        out[n] = zero if c is None or is_zero(c) else c
    return out


def _zero_for(F: RationalGF):
    for v in F.prefix.values():
        return zero_like(v)
    for t in F.terms:
        for _p, c in t.numerator:
            return zero_like(c)
    return Fraction(0)


# ----------------------------------------------------------------------------
# normal form and poles


def _padd(a: dict, b: dict) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out[k] + v if k in out else v
    return {k: v for k, v in out.items() if not is_zero(v)}


def _pmul_scalar(a: dict, s: dict) -> dict:
    """Generic polynomial times a polynomial with integer coefficients."""
    out: dict = {}
    for i, x in a.items():
        for j, y in s.items():
            out[i + j] = out[i + j] + x * y if i + j in out else x * y
    return {k: v for k, v in out.items() if not is_zero(v)}


def _one_minus_power(D: int, E: int) -> dict:
    return {D * i: (-1) ** i * comb(E, i) for i in range(E + 1)}


def _divide_one_minus(num: dict, D: int):
    """num / (1 - q^D) when exact, else None (generic coefficients)."""
    if not num:
        return {}
    lo, hi = min(num), max(num)
    quot: dict = {}
    for k in range(lo, hi - D + 1):
        v = num.get(k, 0)
        prev = quot.get(k - D)
        if prev is not None:
            v = v + prev
        if not is_zero(v):
            quot[k] = v
    # check: quot * (1 - q^D) == num
    back = _padd(quot, {k + D: -v for k, v in quot.items()})
    return quot if back == {k: v for k, v in num.items() if not is_zero(v)} else None


def normalize(F: RationalGF):
    """(a, D, E, numerator) with F = numerator(q) / (q^a (1 - q^D)^E).

    The numerator is a dict power -> coefficient with nonnegative powers.
    Common factors (1 - q^D) and q are cancelled, so the result is canonical
    for a fixed D (the lcm of the term periods).
    """
    D = lcm(*(t.period for t in F.terms)) if F.terms else 1
    E = max((t.exponent for t in F.terms), default=0)
    num: dict = {}
    if F.prefix:
        num = _pmul_scalar(dict(F.prefix), _one_minus_power(D, E))
    for t in F.terms:
        # (1 - q^D) / (1 - q^d) = sum_{i < D/d} q^{i d}
        ratio = {i * t.period: 1 for i in range(D // t.period)}
        factor = {0: 1}
        for _ in range(t.exponent):
            factor = _pmul_scalar(factor, ratio)
        factor = _pmul_scalar(factor, _one_minus_power(D, E - t.exponent))
        tn = {t.shift + t.period * p: c for p, c in t.numerator}
        num = _padd(num, _pmul_scalar(tn, factor))
    while E > 0 and num:
        q = _divide_one_minus(num, D)
        if q is None:
            break
        num, E = q, E - 1
    if not num:
        return 0, 1, 0, {}
    if E == 0:
        D = 1
    low = min(min(num), 0)
    num = {k - low: v for k, v in num.items()}
    return -low, D, E, num


def normalized_text(F: RationalGF, key_text=str) -> str:
    """Canonical ``[numerator] / [denominator]`` text; Vec keys shown with ``key_text``."""
    a, D, E, num = normalize(F)
    if not num:
        return "0"
    ct = lambda c: c.text(key_text) if isinstance(c, Vec) else fraction_text(c)  # noqa: E731
    top = " + ".join(f"({ct(c)})*q^{k}" for k, c in sorted(num.items()))
    den = []
    if a:
        den.append(f"q^{a}")
    if E:
        den.append(f"(1 - q^{D})^{E}")
    return f"[{top}] / [{' * '.join(den) or '1'}]"


@dataclass(frozen=True, order=True)
class RootOfUnity:
    """exp(2 pi i index / order) with gcd(index, order) = 1."""

    order: int
    index: int

    def __str__(self):
        if self.order == 1:
            return "1"
        if self.order == 2:
            return "-1"
        return f"exp(2*pi*i*{self.index}/{self.order})"


@lru_cache(maxsize=None)
def cyclotomic(k: int) -> tuple:
    """Integer coefficients of the k-th cyclotomic polynomial, low degree first."""
    num = [-1] + [0] * (k - 1) + [1]
    for d in divisors(k):
        if d == k:
            continue
        num = _exact_div(num, list(cyclotomic(d)))
    return tuple(num)


def _exact_div(num: list, den: list) -> list:
    num = [Fraction(x) for x in num]
    out = [Fraction(0)] * (len(num) - len(den) + 1)
    for i in range(len(out) - 1, -1, -1):
        c = num[i + len(den) - 1] / den[-1]
        out[i] = c
        for j, y in enumerate(den):
            num[i + j] -= c * y
    if any(num):
        raise ArithmeticError("inexact polynomial division")
    return [int(x) if x.denominator == 1 else x for x in out]


def _valuation(poly: list, factor: tuple, cap: int) -> int:
    """Multiplicity of ``factor`` in a nonzero scalar polynomial, at most ``cap``."""
    v = 0
    while v < cap:
        try:
            poly = _exact_div(poly, list(factor))
        except ArithmeticError:
            break
        v += 1
    return v


def _components(num: dict) -> list[list]:
    """Scalar polynomials (lists) making up a module-valued numerator."""
    deg = max(num)
    if any(isinstance(c, Vec) for c in num.values()):
        keys = sorted({k for c in num.values() for k in c}, key=repr)
        comps = [[Fraction(num.get(i, Vec()).get(key, 0)) for i in range(deg + 1)] for key in keys]
    else:
        comps = [[Fraction(num.get(i, 0)) for i in range(deg + 1)]]
    return [c for c in comps if any(c)]


def pole_locations(F: RationalGF) -> set:
    """{(location, order)}: location is the string "0" or a RootOfUnity."""
    a, D, E, num = normalize(F)
    poles = set()
    if not num:
        return poles
    if a > 0:
        poles.add(("0", a))
    if E == 0:
        return poles
    comps = _components(num)
    for k in divisors(D):
        phi = cyclotomic(k)
        order = E - min(_valuation(c, phi, E) for c in comps)
        if order > 0:
            for j in range(k):
                if gcd(j, k) == 1:
                    poles.add((RootOfUnity(k, j), order))
    return poles


def poles_are_admissible(poles: set) -> bool:
    """Every pole sits at q = 0 or at a root of unity."""
    return all(loc == "0" or isinstance(loc, RootOfUnity) for loc, _order in poles)


def poles_text(poles: set) -> str:
    def key(item):
        loc, order = item
        return (0, 0, 0, order) if loc == "0" else (1, loc.order, loc.index, order)

    return ", ".join(f"q={loc} (order {order})" for loc, order in sorted(poles, key=key)) or "none"
