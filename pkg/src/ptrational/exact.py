"""Exact-arithmetic building blocks shared by the other modules.

Everything here works over :class:`fractions.Fraction`.  Polynomial helpers
are generic in the coefficient type: a coefficient may be a Fraction or a
:class:`Vec` (a finite formal sum over hashable basis keys), since the
quasi-polynomials in this package take values in free modules.
"""

from __future__ import annotations

import re
from fractions import Fraction
from functools import reduce
from math import comb, gcd
from numbers import Number
from typing import Any, Hashable, Iterable, Sequence

from .errors import InputError

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*([+-]?\d+)\s*)?$")


def parse_rational(value: Any, path: str = "value") -> Fraction:
    """Read an exact rational from an int, a Fraction or an ``"a/b"`` string.

    Floats and booleans are rejected: exactness is a global contract.
    """
    if isinstance(value, bool):
        raise InputError(f"expected a rational, got boolean {value!r}", path)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, Fraction):
        return value
    if isinstance(value, str):
        m = _RATIONAL_RE.match(value)
        if not m:
            raise InputError(f"malformed rational {value!r}", path)
        num = int(m.group(1))
        den = int(m.group(2)) if m.group(2) is not None else 1
        if den == 0:
            raise InputError(f"zero denominator in {value!r}", path)
        return Fraction(num, den)
    raise InputError(f"expected an integer or an 'a/b' string, got {type(value).__name__}", path)


def parse_int(value: Any, path: str = "value") -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InputError(f"expected an integer, got {value!r}", path)
    return value


def fraction_text(x: Fraction | int) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def lcm(*values: int) -> int:
    return reduce(lambda a, b: a * b // gcd(a, b), values, 1)


def divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def falling(x: int, k: int) -> int:
    """x (x-1) ... (x-k+1)."""
    out = 1
    for i in range(k):
        out *= x - i
    return out


def _is_zero_scalar(x) -> bool:
    return isinstance(x, Number) and x == 0


class Vec(dict):
    """A finite formal linear combination ``{basis key: nonzero Fraction}``.

    Treated as immutable: arithmetic always returns new objects.  The integer
    0 behaves as the additive identity so that ``sum()`` and Horner loops work
    unchanged for scalar and vector coefficients.
    """

    __slots__ = ()
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, data: Any = None):
        super().__init__()
        if data:
            items = data.items() if hasattr(data, "items") else data
            for k, v in items:
                v = Fraction(v)
                if v:
                    dict.__setitem__(self, k, v)

    @classmethod
    def basis(cls, key: Hashable, coeff: Fraction | int = 1) -> "Vec":
        return cls({key: coeff})

    def _new(self, data: dict) -> "Vec":
        out = self.__class__()
        for k, v in data.items():
            if v:
                dict.__setitem__(out, k, v)
        return out

    def __add__(self, other):
        if _is_zero_scalar(other):
            return self
        if not isinstance(other, Vec):
            return NotImplemented
        acc = dict(self)
        for k, v in other.items():
            acc[k] = acc.get(k, 0) + v
        return self._new(acc)

    __radd__ = __add__

    def __neg__(self):
        return self._new({k: -v for k, v in self.items()})

    def __sub__(self, other):
        if _is_zero_scalar(other):
            return self
        if not isinstance(other, Vec):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        if _is_zero_scalar(other):
            return -self
        return NotImplemented

    def __mul__(self, scalar):
        if isinstance(scalar, Vec) or not isinstance(scalar, Number):
            return NotImplemented
        if scalar == 0:
            return self.__class__()
        scalar = Fraction(scalar)
        return self._new({k: v * scalar for k, v in self.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1 / Fraction(scalar))

    def __eq__(self, other):
        if _is_zero_scalar(other):
            return len(self) == 0
        if isinstance(other, dict):
            return dict.__eq__(self, other)
        return NotImplemented

    def __ne__(self, other):
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __setitem__(self, key, value):  # pragma: no cover - guard
        raise TypeError("Vec is immutable")

    def map_keys(self, fn) -> "Vec":
        acc: dict = {}
        for k, v in self.items():
            nk = fn(k)
            acc[nk] = acc.get(nk, 0) + v
        return self._new(acc)

    def sorted_items(self) -> list:
        return sorted(self.items(), key=lambda kv: kv[0])

    def text(self, key_text=str) -> str:
        """Sorted ``c*key`` summands joined by `` + ``; "0" when empty."""
        parts = [f"{fraction_text(v)}*{key_text(k)}" for k, v in self.sorted_items()]
        return " + ".join(parts) if parts else "0"

    def __repr__(self):
        return f"{type(self).__name__}({{{', '.join(f'{k!r}: {fraction_text(v)}' for k, v in self.sorted_items())}}})"


def zero_like(x):
    return x.__class__() if isinstance(x, Vec) else Fraction(0)


def is_zero(x) -> bool:
    return (isinstance(x, Vec) and not x) or (not isinstance(x, Vec) and x == 0)


# ----------------------------------------------------------------------------
# univariate polynomials: tuples of coefficients, lowest degree first


def poly_trim(coeffs: Iterable) -> tuple:
    out = list(coeffs)
    while out and is_zero(out[-1]):
        out.pop()
    return tuple(out)


def poly_degree(coeffs: Sequence) -> int:
    """Degree of a trimmed polynomial; -1 for the zero polynomial."""
    return len(poly_trim(coeffs)) - 1


def poly_eval(coeffs: Sequence, x):
    acc = 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc if not _is_zero_scalar(acc) else Fraction(0)


def poly_add(a: Sequence, b: Sequence) -> tuple:
    n = max(len(a), len(b))
    out = []
    for i in range(n):
        x = a[i] if i < len(a) else 0
        y = b[i] if i < len(b) else 0
        out.append(x + y)
    return poly_trim(out)


def poly_scale(a: Sequence, s) -> tuple:
    return poly_trim(c * s for c in a)


def poly_mul(a: Sequence, b: Sequence) -> tuple:
    """Product where ``a`` has scalar coefficients and ``b`` is generic."""
    if not a or not b:
        return ()
    out: list = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + y * x
    return poly_trim(out)


def poly_compose_affine(coeffs: Sequence, scale, shift) -> tuple:
    """Coefficients of ``P(scale * n + shift)`` as a polynomial in n."""
    lin = (Fraction(shift), Fraction(scale))
    acc: tuple = ()
    for c in reversed(coeffs):
        acc = poly_add(poly_mul(lin, acc), (c,))
    return acc


def binomial_poly(j: int) -> tuple:
    """Coefficients of ``binom(k, j)`` as a polynomial in k."""
    acc: tuple = (Fraction(1),)
    for i in range(j):
        acc = poly_mul((Fraction(-i), Fraction(1)), acc)
    return poly_scale(acc, Fraction(1, _fact(j)))


def _fact(n: int) -> int:
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


def interpolate(xs: Sequence[int], ys: Sequence) -> tuple:
    """The unique polynomial of degree < len(xs) through the points.

    Newton divided differences; the y values may be Fractions or Vecs.
    """
    xs = [Fraction(x) for x in xs]
    table = list(ys)
    newton = [table[0]]
    for level in range(1, len(xs)):
        table = [(table[i + 1] - table[i]) / (xs[i + level] - xs[i]) for i in range(len(table) - 1)]
        newton.append(table[0])
    acc: tuple = ()
    for level in range(len(xs) - 1, -1, -1):
        acc = poly_add(poly_mul((-xs[level], Fraction(1)), acc), (newton[level],))
    return acc


def poly_text(coeffs: Sequence, var: str = "n", coeff_text=None) -> str:
    coeff_text = coeff_text or (lambda c: c.text() if isinstance(c, Vec) else fraction_text(c))
    parts = []
    for i, c in enumerate(coeffs):
        if is_zero(c):
            continue
        mono = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
        ct = coeff_text(c)
        parts.append(f"({ct})" + (f"*{mono}" if mono else ""))
    return " + ".join(parts) if parts else "0"


# ----------------------------------------------------------------------------
# multivariate polynomials: {exponent tuple: coefficient}


def mpoly_clean(p: dict) -> dict:
    return {e: c for e, c in p.items() if not is_zero(c)}


def mpoly_eval(p: dict, point: Sequence):
    acc = 0
    for exps, c in p.items():
        m = Fraction(1)
        for x, e in zip(point, exps):
            if e:
                m *= Fraction(x) ** e
        acc = acc + c * m
    return acc if not _is_zero_scalar(acc) else Fraction(0)


def mpoly_add(a: dict, b: dict) -> dict:
    out = dict(a)
    for e, c in b.items():
        out[e] = out[e] + c if e in out else c
    return mpoly_clean(out)


def mpoly_degree(p: dict) -> int:
    return max((sum(e) for e, c in p.items() if not is_zero(c)), default=-1)


def mpoly_compose_affine(p: dict, shift: Sequence, scale) -> dict:
    """Substitute ``x_i = shift_i + scale * m_i`` and expand in the m_i."""
    out: dict = {}
    k = len(shift)
    for exps, c in p.items():
        # expand prod_i (shift_i + scale m_i)^{e_i}
        partial = {(0,) * k: Fraction(1)}
        for i, e in enumerate(exps):
            nxt: dict = {}
            for t in range(e + 1):
                factor = comb(e, t) * Fraction(shift[i]) ** (e - t) * Fraction(scale) ** t
                if factor == 0:
                    continue
                for key, val in partial.items():
                    nk = key[:i] + (key[i] + t,) + key[i + 1:]
                    nxt[nk] = nxt.get(nk, 0) + val * factor
            partial = nxt
        for key, val in partial.items():
            out[key] = out[key] + c * val if key in out else c * val
    return mpoly_clean(out)


def univariate_to_mpoly(coeffs: Sequence) -> dict:
    return mpoly_clean({(i,): c for i, c in enumerate(coeffs)})


def mpoly_to_univariate(p: dict) -> tuple:
    if not p:
        return ()
    deg = max(e[0] for e in p)
    out: list = [0] * (deg + 1)
    for (e,), c in p.items():
        out[e] = c
    return poly_trim(out)


# ----------------------------------------------------------------------------
# linear algebra


def solve_linear(rows: Sequence[Sequence], rhs: Sequence) -> list[Fraction] | None:
    """Solve a square system exactly; ``None`` when singular."""
    n = len(rows)
    a = [[Fraction(x) for x in row] + [Fraction(b)] for row, b in zip(rows, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return None
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1 / a[col][col]
        a[col] = [x * inv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[r][n] for r in range(n)]
