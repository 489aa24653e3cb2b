"""Quasi-polynomials, chamber decompositions of Z^k and lattice sums over them.

A :class:`QuasiPoly` in k variables stores one polynomial per residue vector
modulo a shared period.  Coefficients may be Fractions or :class:`Vec` module
elements.  A :class:`PiecewiseQP` attaches quasi-polynomials to the chambers
of a finite partition of Z^k cut out by rational affine (in)equalities.

The fitting routines (``certify_pqp``, ``solve_difference``) never trust a fit
they have not checked on points that were not used to build it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from math import ceil, comb, floor, gcd
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .errors import (
    CertificationError,
    InputError,
    NotQuasiPolynomialError,
    NotUnipotentError,
    PreconditionError,
)
from .exact import (
    Vec,
    binomial_poly,
    divisors,
    fraction_text,
    interpolate,
    is_zero,
    lcm,
    mpoly_add,
    mpoly_clean,
    mpoly_compose_affine,
    mpoly_degree,
    mpoly_eval,
    mpoly_to_univariate,
    poly_add,
    poly_compose_affine,
    poly_degree,
    poly_eval,
    poly_scale,
    poly_text,
    poly_trim,
    univariate_to_mpoly,
)

# ============================================================================
# quasi-polynomials


def _as_point(n) -> tuple:
    return tuple(n) if isinstance(n, (tuple, list)) else (n,)


class QuasiPoly:
    """f(n) = P_a(n) for n congruent to the residue vector a modulo ``period``."""

    __slots__ = ("period", "nvars", "polys")

    def __init__(self, period: int, polys: Mapping, nvars: int = 1, canonical: bool = True):
        if not isinstance(period, int) or period < 1:
            raise InputError("period must be a positive integer")
        cleaned = {}
        for res, p in polys.items():
            res = tuple(x % period for x in _as_point(res))
            if len(res) != nvars:
                raise InputError(f"residue {res} does not have {nvars} components")
            p = mpoly_clean(p)
            if p:
                cleaned[res] = p
        self.period = period
        self.nvars = nvars
        self.polys = cleaned
        if canonical:
            self._canonicalize()

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_branches(cls, period: int, branches: Sequence[Sequence]) -> "QuasiPoly":
        """Univariate: ``branches[r]`` are the coefficients used when n = r mod period."""
        if len(branches) != period:
            raise InputError(f"expected {period} branches, got {len(branches)}")
        return cls(period, {(r,): univariate_to_mpoly(b) for r, b in enumerate(branches)})

    @classmethod
    def polynomial(cls, poly: Mapping, nvars: int) -> "QuasiPoly":
        return cls(1, {(0,) * nvars: poly}, nvars)

    @classmethod
    def zero(cls, nvars: int = 1) -> "QuasiPoly":
        return cls(1, {}, nvars)

    # -- structure ----------------------------------------------------------
    def _canonicalize(self):
        d = self.period
        for e in divisors(d):
            if e == d:
                break
            if all(
                self.polys.get(r, {}) == self.polys.get(tuple(x % e for x in r), {})
                for r in product(range(d), repeat=self.nvars)
            ):
                self.polys = {r: p for r, p in self.polys.items() if all(x < e for x in r)}
                self.period = e
                return

    def branch(self, residue) -> tuple:
        """Univariate coefficient tuple for the given residue."""
        if self.nvars != 1:
            raise InputError("branch() is for univariate quasi-polynomials")
        return mpoly_to_univariate(self.polys.get((residue % self.period,), {}))

    def mpoly(self, residue) -> dict:
        return self.polys.get(tuple(x % self.period for x in _as_point(residue)), {})

    def degree(self) -> int:
        return max((mpoly_degree(p) for p in self.polys.values()), default=-1)

    def branch_degrees(self) -> list[int]:
        return [mpoly_degree(self.polys.get(r, {})) for r in product(range(self.period), repeat=self.nvars)]

    def is_zero(self) -> bool:
        return not self.polys

    def __call__(self, n):
        point = _as_point(n)
        p = self.mpoly(point)
        return mpoly_eval(p, point) if p else _zero_of(self)

    def __eq__(self, other):
        if not isinstance(other, QuasiPoly):
            return NotImplemented
        return self.nvars == other.nvars and self.period == other.period and self.polys == other.polys

    def __hash__(self):  # pragma: no cover - mutable-ish container
        raise TypeError("QuasiPoly is not hashable")

    def __add__(self, other: "QuasiPoly") -> "QuasiPoly":
        return qp_add(self, other)

    def scale(self, c) -> "QuasiPoly":
        return QuasiPoly(self.period, {r: {e: v * c for e, v in p.items()} for r, p in self.polys.items()}, self.nvars)

    def map_coeffs(self, fn: Callable) -> "QuasiPoly":
        return QuasiPoly(self.period, {r: {e: fn(v) for e, v in p.items()} for r, p in self.polys.items()}, self.nvars)

    def text(self, key_text=str) -> str:
        coeff_text = lambda c: c.text(key_text) if isinstance(c, Vec) else fraction_text(c)  # noqa: E731
        if self.nvars != 1:
            items = sorted(self.polys.items())
            return f"period {self.period}; " + "; ".join(f"{r}: {sorted(p.items())}" for r, p in items)
        parts = [f"period {self.period}"]
        for r in range(self.period):
            parts.append(f"[n = {r} mod {self.period}] {poly_text(self.branch(r), 'n', coeff_text)}")
        return "; ".join(parts)

    def __repr__(self):
        return f"QuasiPoly({self.text()})"


def _zero_of(qp: QuasiPoly):
    for p in qp.polys.values():
        for v in p.values():
            return v.__class__() if isinstance(v, Vec) else Fraction(0)
    return Fraction(0)


def qp_eval(f: QuasiPoly, n):
    return f(n)


def qp_add(f: QuasiPoly, g: QuasiPoly) -> QuasiPoly:
    if f.nvars != g.nvars:
        raise InputError("quasi-polynomials in different numbers of variables")
    kinds = {isinstance(v, Vec) for q in (f, g) for p in q.polys.values() for v in p.values()}
    if len(kinds) > 1:
        raise InputError("cannot add scalar-valued and module-valued quasi-polynomials")
    d = lcm(f.period, g.period)
    polys = {}
    for r in product(range(d), repeat=f.nvars):
        polys[r] = mpoly_add(f.mpoly(r), g.mpoly(r))
    return QuasiPoly(d, polys, f.nvars)


# ============================================================================
# chambers

_RELS = ("<", "<=", "=", ">=", ">")
_NEGATE = {"<": [">="], "<=": [">"], ">=": ["<"], ">": ["<="], "=": ["<", ">"]}


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple
    rel: str
    bound: Fraction

    def __post_init__(self):
        if self.rel not in _RELS:
            raise InputError(f"unknown relation {self.rel!r}")
        object.__setattr__(self, "coeffs", tuple(Fraction(c) for c in self.coeffs))
        object.__setattr__(self, "bound", Fraction(self.bound))

    def value(self, point) -> Fraction:
        return sum((c * x for c, x in zip(self.coeffs, point)), Fraction(0))

    def holds(self, point) -> bool:
        v, b = self.value(point), self.bound
        return {"<": v < b, "<=": v <= b, "=": v == b, ">=": v >= b, ">": v > b}[self.rel]

    def negations(self) -> list["Constraint"]:
        return [Constraint(self.coeffs, r, self.bound) for r in _NEGATE[self.rel]]

    def integer_form(self):
        """Equivalent condition on integer points: ('le', a, b) for a.x <= b,
        ('eq', a, b), or the booleans True (always) / False (never)."""
        den = lcm(*(c.denominator for c in self.coeffs))
        a = [int(c * den) for c in self.coeffs]
        b = self.bound * den
        g = 0
        for x in a:
            g = gcd(g, abs(x))
        if g == 0:
            return self._constant_truth()
        a = [x // g for x in a]
        b = b / g
        if self.rel == "<=":
            return ("le", tuple(a), floor(b))
        if self.rel == "<":
            return ("le", tuple(a), ceil(b) - 1)
        if self.rel == ">=":
            return ("le", tuple(-x for x in a), -ceil(b))
        if self.rel == ">":
            return ("le", tuple(-x for x in a), -(floor(b) + 1))
        if b.denominator != 1:
            return False
        return ("eq", tuple(a), int(b))

    def _constant_truth(self) -> bool:
        return {"<": 0 < self.bound, "<=": 0 <= self.bound, "=": self.bound == 0,
                ">=": 0 >= self.bound, ">": 0 > self.bound}[self.rel]

    def text(self, var: str = "n") -> str:
        k = len(self.coeffs)
        names = [var] if k == 1 else [f"{var}{i + 1}" for i in range(k)]
        lhs = " + ".join(f"{fraction_text(c)}*{v}" for c, v in zip(self.coeffs, names) if c) or "0"
        return f"{lhs} {self.rel} {fraction_text(self.bound)}"


def parse_constraint(data, nvars: int, path: str = "constraint") -> Constraint:
    from .exact import parse_rational

    if not isinstance(data, (list, tuple)) or len(data) != 3:
        raise InputError("a constraint is [coefficients, relation, bound]", path)
    coeffs, rel, bound = data
    if not isinstance(coeffs, list) or len(coeffs) != nvars:
        raise InputError(f"expected {nvars} coefficients", path)
    if rel not in _RELS:
        raise InputError(f"unknown relation {rel!r}; expected one of {', '.join(_RELS)}", f"{path}[1]")
    return Constraint(
        tuple(parse_rational(c, f"{path}[0][{i}]") for i, c in enumerate(coeffs)),
        rel,
        parse_rational(bound, f"{path}[2]"),
    )


def _fm_eliminate(ineqs: list, var: int) -> list:
    pos, neg, rest = [], [], []
    for a, b in ineqs:
        (pos if a[var] > 0 else neg if a[var] < 0 else rest).append((a, b))
    seen = set(rest)
    out = list(rest)
    for ap, bp in pos:
        for an, bn in neg:
            cp, cn = ap[var], -an[var]
            a = tuple(x * cn + y * cp for x, y in zip(ap, an))
            b = bp * cn + bn * cp
            key = (a, b)
            if key not in seen:
                seen.add(key)
                out.append(key)
    return out


def fm_bounds(ineqs: list, nvars: int, var: int):
    """Real bounds of ``var`` over {a.x <= b}: (lo, hi) with None for infinite,
    or None when the system is infeasible."""
    system = [(tuple(a), b) for a, b in ineqs]
    for j in range(nvars):
        if j != var:
            system = _fm_eliminate(system, j)
    lo = hi = None
    for a, b in system:
        c = a[var]
        if c > 0:
            v = Fraction(b) / c
            hi = v if hi is None else min(hi, v)
        elif c < 0:
            v = Fraction(b) / c
            lo = v if lo is None else max(lo, v)
        elif b < 0:
            return None
    if lo is not None and hi is not None and lo > hi:
        return None
    return lo, hi


class Chamber:
    """A set {x in Z^k : every constraint holds}."""

    __slots__ = ("constraints", "nvars", "_int")

    def __init__(self, constraints: Iterable[Constraint], nvars: int):
        self.constraints = tuple(constraints)
        self.nvars = nvars
        for c in self.constraints:
            if len(c.coeffs) != nvars:
                raise InputError(f"constraint {c.text()} does not have {nvars} coefficients")
        self._int = None

    @classmethod
    def interval(cls, lo: int | None, hi: int | None) -> "Chamber":
        cons = []
        if lo is not None:
            cons.append(Constraint((1,), ">=", lo))
        if hi is not None:
            cons.append(Constraint((1,), "<=", hi))
        return cls(cons, 1)

    def contains(self, point) -> bool:
        point = _as_point(point)
        return all(c.holds(point) for c in self.constraints)

    def intersect(self, other: "Chamber") -> "Chamber":
        return Chamber(self.constraints + other.constraints, self.nvars)

    def complement(self) -> list["Chamber"]:
        """Disjoint chambers covering the lattice points outside this one."""
        out = []
        for i, c in enumerate(self.constraints):
            for neg in c.negations():
                out.append(Chamber(self.constraints[:i] + (neg,), self.nvars))
        return out

    def integer_system(self):
        """(ineqs, eqs) over integer points, or None if visibly empty."""
        if self._int is None:
            ineqs, eqs = [], []
            empty = False
            for c in self.constraints:
                form = c.integer_form()
                if form is True:
                    continue
                if form is False:
                    empty = True
                    break
                kind, a, b = form
                (ineqs if kind == "le" else eqs).append((a, b))
            self._int = None if empty else (ineqs, eqs)
            if empty:
                self._int = "empty"
        return None if self._int == "empty" else self._int

    def _le_system(self, extra_eq=None):
        sysm = self.integer_system()
        if sysm is None:
            return None
        ineqs, eqs = sysm
        out = list(ineqs)
        for a, b in eqs + ([extra_eq] if extra_eq else []):
            out.append((tuple(a), b))
            out.append((tuple(-x for x in a), -b))
        return out

    def is_empty(self) -> bool:
        """Whether the chamber has no lattice point.

        Exact when the real solution set is bounded (its lattice points are
        enumerated); for unbounded chambers in k > 1 variables only the real
        relaxation is tested.
        """
        if self.nvars == 1:
            return self.int_interval() is None
        system = self._le_system()
        if system is None:
            return True
        bounds = [fm_bounds(system, self.nvars, v) for v in range(self.nvars)]
        if any(b is None for b in bounds):
            return True
        if all(b[0] is not None and b[1] is not None for b in bounds):
            return next(_points(self.integer_system(), self.nvars), None) is None
        return False

    def int_interval(self):
        """For k = 1: (lo, hi) integer bounds (None = infinite), or None if empty."""
        if self.nvars != 1:
            raise InputError("int_interval is for one-variable chambers")
        sysm = self.integer_system()
        if sysm is None:
            return None
        ineqs, eqs = sysm
        lo = hi = None
        for (a,), b in ineqs:
            if a > 0:
                v = floor(Fraction(b, a))
                hi = v if hi is None else min(hi, v)
            else:
                v = ceil(Fraction(b, a))
                lo = v if lo is None else max(lo, v)
        for (a,), b in eqs:
            if b % a:
                return None
            v = b // a
            lo = v if lo is None else max(lo, v)
            hi = v if hi is None else min(hi, v)
        if lo is not None and hi is not None and lo > hi:
            return None
        return lo, hi

    def slices_bounded(self) -> bool:
        """Whether every slice {sum x_i = n} is bounded (recession-cone test)."""
        cone = []
        for c in self.constraints:
            a = c.coeffs
            if c.rel in ("<", "<="):
                cone.append((a, 0))
            elif c.rel in (">", ">="):
                cone.append((tuple(-x for x in a), 0))
            else:
                cone.append((a, 0))
                cone.append((tuple(-x for x in a), 0))
        ones = tuple(Fraction(1) for _ in range(self.nvars))
        cone += [(ones, 0), (tuple(-x for x in ones), 0)]
        for var in range(self.nvars):
            b = fm_bounds(cone, self.nvars, var)
            if b is None:
                continue
            lo, hi = b
            if lo is None or hi is None:
                return False
        return True

    def text(self) -> str:
        return " and ".join(c.text() for c in self.constraints) if self.constraints else "all"

    def __repr__(self):
        return f"Chamber({self.text()})"


# ============================================================================
# piecewise quasi-polynomials


class PiecewiseQP:
    """Quasi-polynomials attached to the chambers of a partition of Z^k."""

    def __init__(self, pieces: Iterable[tuple[Chamber, QuasiPoly]], nvars: int, certificate: dict | None = None):
        self.pieces = [(c, q) for c, q in pieces]
        self.nvars = nvars
        self.certificate = certificate or {}

    @classmethod
    def from_support(cls, chamber: Chamber, qp: QuasiPoly) -> "PiecewiseQP":
        zero = QuasiPoly.zero(chamber.nvars)
        return cls([(chamber, qp)] + [(c, zero) for c in chamber.complement()], chamber.nvars)

    def locate(self, point) -> list[int]:
        point = _as_point(point)
        return [i for i, (c, _q) in enumerate(self.pieces) if c.contains(point)]

    def __call__(self, point):
        hits = self.locate(point)
        if len(hits) != 1:
            raise CertificationError("point is not covered by exactly one chamber", (point, hits))
        return self.pieces[hits[0]][1](point)

    def check_partition(self, points: Iterable) -> bool:
        return all(len(self.locate(p)) == 1 for p in points)

    def text(self, key_text=str) -> str:
        return "\n".join(f"{c.text()}: {q.text(key_text)}" for c, q in self.pieces)


def _intervals(p: PiecewiseQP) -> list[tuple]:
    out = []
    for c, q in p.pieces:
        iv = c.int_interval()
        if iv is not None:
            out.append((iv[0], iv[1], q))
    return out


def _merge_intervals(items: list[tuple]) -> PiecewiseQP:
    """Sort 1-D (lo, hi, qp) pieces and merge neighbours with equal quasi-polynomials."""
    items = sorted(items, key=lambda t: (t[0] is not None, t[0] if t[0] is not None else 0))
    merged: list = []
    for lo, hi, q in items:
        if merged and merged[-1][2] == q:
            merged[-1] = (merged[-1][0], hi, q)
        else:
            merged.append((lo, hi, q))
    return PiecewiseQP([(Chamber.interval(lo, hi), q) for lo, hi, q in merged], 1)


def pqp_add(F: PiecewiseQP, G: PiecewiseQP) -> PiecewiseQP:
    if F.nvars != G.nvars:
        raise InputError("piecewise quasi-polynomials in different dimensions")
    if F.nvars == 1:
        a, b = _intervals(F), _intervals(G)
        cuts = sorted({x for lo, hi, _ in a + b for x in ((lo,) if lo is not None else ()) + ((hi + 1,) if hi is not None else ())})
        bounds = [None] + cuts + [None]
        items = []
        for lo, nxt in zip(bounds, bounds[1:]):
            hi = None if nxt is None else nxt - 1
            probe = lo if lo is not None else (hi if hi is not None else 0)
            total = None
            for plo, phi, q in a + b:
                if (plo is None or plo <= probe) and (phi is None or probe <= phi):
                    total = q if total is None else qp_add(total, q)
            items.append((lo, hi, total if total is not None else QuasiPoly.zero()))
        return _merge_intervals(items)
    pieces = []
    for cf, qf in F.pieces:
        for cg, qg in G.pieces:
            c = cf.intersect(cg)
            if not c.is_empty():
                pieces.append((c, qp_add(qf, qg)))
    return PiecewiseQP(pieces, F.nvars)


# ============================================================================
# lattice sums


def _single_var_range(ineqs, eqs):
    lo = hi = None
    for (a,), b in ineqs:
        if a > 0:
            v = floor(Fraction(b, a))
            hi = v if hi is None else min(hi, v)
        elif a < 0:
            v = ceil(Fraction(b, a))
            lo = v if lo is None else max(lo, v)
        elif b < 0:
            return None
    for (a,), b in eqs:
        if a == 0:
            if b != 0:
                return None
            continue
        if b % a:
            return None
        v = b // a
        lo = v if lo is None else max(lo, v)
        hi = v if hi is None else min(hi, v)
    if lo is None or hi is None:
        raise PreconditionError("slice is unbounded")
    return None if lo > hi else (lo, hi)


def _substitute(system, var_index: int, value: int):
    ineqs, eqs = system
    drop = lambda a: a[:var_index] + a[var_index + 1:]  # noqa: E731
    return ([(drop(a), b - a[var_index] * value) for a, b in ineqs],
            [(drop(a), b - a[var_index] * value) for a, b in eqs])


def _points(system, nvars: int):
    """Integer points of a bounded system in ``nvars`` variables."""
    ineqs, eqs = system
    if nvars == 0:
        if all(b >= 0 for _a, b in ineqs) and all(b == 0 for _a, b in eqs):
            yield ()
        return
    if nvars == 1:
        rng = _single_var_range(ineqs, eqs)
        if rng is None:
            return
        for x in range(rng[0], rng[1] + 1):
            yield (x,)
        return
    le = list(ineqs) + [e for a, b in eqs for e in ((a, b), (tuple(-x for x in a), -b))]
    bnd = fm_bounds(le, nvars, 0)
    if bnd is None:
        return
    lo, hi = bnd
    if lo is None or hi is None:
        raise PreconditionError("slice is unbounded")
    for x in range(ceil(lo), floor(hi) + 1):
        for rest in _points(_substitute(system, 0, x), nvars - 1):
            yield (x,) + rest


def slice_points(Q: Chamber, n: int) -> Iterator[tuple]:
    """Lattice points of Q with coordinate sum n."""
    sysm = Q.integer_system()
    if sysm is None:
        return
    k = Q.nvars
    ineqs, eqs = sysm
    # eliminate the last coordinate with x_k = n - (x_1 + ... + x_{k-1})
    def sub(a, b):
        last = a[-1]
        return tuple(x - last for x in a[:-1]), b - last * n

    reduced = ([sub(a, b) for a, b in ineqs], [sub(a, b) for a, b in eqs])
    for head in _points(reduced, k - 1):
        yield head + (n - sum(head),)


def ehrhart_sum(Q: Chamber, w, n: int, _checked: bool = False):
    """Sum of the polynomial weight ``w`` (an mpoly dict) over Q with sum x_i = n."""
    if not _checked and not Q.slices_bounded():
        raise PreconditionError(f"slices of {Q.text()} are unbounded")
    acc = 0
    for x in slice_points(Q, n):
        acc = acc + mpoly_eval(w, x)
    if isinstance(acc, int):
        acc = Fraction(acc)
    return acc


def slice_breakpoints(Q: Chamber):
    """Candidate values of n where the combinatorics of Q ∩ {sum x = n} changes,
    and the lcm of denominators of the slice vertices (as affine functions of n)."""
    sysm = Q.integer_system()
    if sysm is None:
        return [], 1
    ineqs, eqs = sysm
    planes = [(tuple(Fraction(x) for x in a), Fraction(b)) for a, b in ineqs + eqs]
    k = Q.nvars
    ones = tuple(Fraction(1) for _ in range(k))
    crits: set = set()
    den = 1
    from .exact import solve_linear

    for subset in combinations(range(len(planes)), k - 1):
        rows = [planes[i][0] for i in subset] + [ones]
        x0 = solve_linear(rows, [planes[i][1] for i in subset] + [Fraction(0)])
        if x0 is None:
            continue
        x1 = solve_linear(rows, [Fraction(0)] * (k - 1) + [Fraction(1)])
        den = lcm(den, *(v.denominator for v in x0 + x1))
        for a, b in planes:
            slope = sum((p * q for p, q in zip(a, x1)), Fraction(0))
            if slope:
                crits.add((b - sum((p * q for p, q in zip(a, x0)), Fraction(0))) / slope)
    return sorted(crits), den


def _pieces_from_breakpoints(crits: list[Fraction]) -> list[tuple]:
    """Integer intervals (lo, hi) between and at the breakpoints; None = infinite."""
    out = []
    prev = None  # previous breakpoint
    for c in crits:
        lo = None if prev is None else floor(prev) + 1
        hi = ceil(c) - 1
        if lo is None or lo <= hi:
            out.append((lo, hi))
        if c.denominator == 1:
            out.append((int(c), int(c)))
        prev = c
    out.append((None if prev is None else floor(prev) + 1, None))
    if not crits:
        out = [(None, None)]
    return out


def _fit_residues(points: list[int], values: dict, period: int, degree: int):
    """Fit one polynomial per residue on the first degree+1 points, check the rest.

    Returns (branches, held_out_count) or raises with the first failing n."""
    branches = []
    held = 0
    for r in range(period):
        pts = [n for n in points if n % period == r]
        if len(pts) < degree + 2:
            return None
        train = pts[: degree + 1]
        poly = interpolate(train, [values[n] for n in train])
        for n in pts[degree + 1:]:
            if poly_eval(poly, n) != values[n]:
                raise _FitMiss(n)
            held += 1
        branches.append(poly)
    return branches, held


class _FitMiss(Exception):
    def __init__(self, n):
        self.n = n


def certify_pqp(Q: Chamber, w, rng: tuple[int, int] = (-200, 200), period_bound: int | None = None) -> PiecewiseQP:
    """Fit and certify n -> ehrhart_sum(Q, w, n) as a piecewise quasi-polynomial.

    Breakpoints come from the slice vertices; on each resulting interval a
    period (a divisor of ``period_bound``, by default the vertex denominator
    lcm) and per-residue polynomials are fitted on part of the sampled values
    and checked on all remaining ones.  Short bounded intervals become
    singleton chambers.  The certificate records every choice.
    """
    if not Q.slices_bounded():
        raise PreconditionError(f"slices of {Q.text()} are unbounded")
    lo_r, hi_r = rng
    crits, den = slice_breakpoints(Q)
    bound = period_bound or den
    degree = max(mpoly_degree(w), 0) + Q.nvars - 1
    need = bound * (degree + 4)
    cache: dict = {}

    def value(n):
        if n not in cache:
            cache[n] = ehrhart_sum(Q, w, n, _checked=True)
        return cache[n]

    items = []
    cert_pieces = []
    for lo, hi in _pieces_from_breakpoints(crits):
        if lo is not None and hi is not None and hi - lo + 1 < need:
            for n in range(lo, hi + 1):
                v = value(n)
                items.append((n, n, QuasiPoly(1, {(0,): {(0,): v}})))
            cert_pieces.append({"interval": (lo, hi), "kind": "singletons"})
            continue
        # sample window: the part of the range inside the piece, widened to ``need`` points
        a = max(lo, lo_r) if lo is not None else lo_r
        b = min(hi, hi_r) if hi is not None else hi_r
        if lo is not None and a > hi_r:
            a, b = lo, lo + need - 1
        if hi is not None and b < lo_r:
            a, b = hi - need + 1, hi
        if b - a + 1 < need:
            if hi is None:
                b = a + need - 1
            else:
                a = b - need + 1
        pts = list(range(a, b + 1))
        vals = {n: value(n) for n in pts}
        fitted = None
        last_miss = None
        for d in divisors(bound):
            try:
                got = _fit_residues(pts, vals, d, degree)
            except _FitMiss as miss:
                last_miss = miss.n
                continue
            if got is not None:
                fitted = (d, got)
                break
        if fitted is None:
            raise CertificationError("no quasi-polynomial fit on an interval", {"interval": (lo, hi), "n": last_miss})
        d, (branches, held) = fitted
        q = QuasiPoly.from_branches(d, [branches[r] for r in range(d)])
        items.append((lo, hi, q))
        cert_pieces.append({"interval": (lo, hi), "kind": "quasi-polynomial", "period": q.period,
                            "held_out": held, "sampled": (a, b)})
    result = _absorb(items, value)
    result.certificate = {"breakpoints": crits, "period_bound": bound, "degree_bound": degree,
                          "pieces": cert_pieces, "range": rng}
    return result


def _absorb(items: list[tuple], value: Callable) -> PiecewiseQP:
    """Merge bounded pieces into a neighbour whose quasi-polynomial reproduces them."""
    items = sorted(items, key=lambda t: (t[0] is not None, t[0] if t[0] is not None else 0))
    changed = True
    while changed:
        changed = False
        for i in range(len(items)):
            lo, hi, q = items[i]
            if lo is None or hi is None:
                continue
            for j in (i - 1, i + 1):
                if 0 <= j < len(items):
                    q2 = items[j][2]
                    if all(q2(n) == value(n) for n in range(lo, hi + 1)):
                        nlo = items[j][0] if j < i else lo
                        nhi = hi if j < i else items[j][1]
                        items[min(i, j)] = (nlo, nhi, q2)
                        del items[max(i, j)]
                        changed = True
                        break
            if changed:
                break
    return _merge_intervals(items)


def affine_pullback(g: PiecewiseQP, shift: int, step: int) -> PiecewiseQP:
    """h(n) = g((n - shift) / step) when n = shift mod step, else 0."""
    pieces = []
    for c, q in g.pieces:
        cons = [Constraint((co.coeffs[0] / step,), co.rel, co.bound + co.coeffs[0] * Fraction(shift, step))
                for co in c.constraints]
        e = q.period
        period = step * e
        polys = {}
        for r in range(period):
            if (r - shift) % step:
                continue
            rp = ((r - shift) // step) % e
            uni = q.branch(rp)
            polys[(r,)] = univariate_to_mpoly(poly_compose_affine(uni, Fraction(1, step), Fraction(-shift, step)))
        qn = QuasiPoly(period, polys)
        pieces.append((Chamber(cons, 1), qn))
    return _merge_intervals([(iv[0], iv[1], q) for (c, q) in pieces for iv in [c.int_interval()] if iv is not None])


def convolve_fiberwise(F: PiecewiseQP, rng: tuple[int, int] = (-200, 200)) -> PiecewiseQP:
    """H(n) = sum over n_1 + ... + n_k = n of F(n_1, ..., n_k).

    Each chamber and residue class of F is rewritten as a lattice sum over a
    rescaled chamber, certified with :func:`certify_pqp`, and pulled back
    along n = (sum of residues) + period * n'.
    """
    k = F.nvars
    total = PiecewiseQP([(Chamber([], 1), QuasiPoly.zero())], 1)
    for chamber, q in F.pieces:
        if q.is_zero():
            continue
        if not chamber.slices_bounded():
            raise PreconditionError(f"support chamber {chamber.text()} has unbounded fibers")
        d = q.period
        for res, poly in sorted(q.polys.items()):
            # x = res + d m lies in the chamber  <=>  (d C) . m  rel  D - C . res
            cons = [Constraint(tuple(c * d for c in co.coeffs), co.rel,
                               co.bound - sum((c * r for c, r in zip(co.coeffs, res)), Fraction(0)))
                    for co in chamber.constraints]
            sub = Chamber(cons, k)
            weight = mpoly_compose_affine(poly, res, d)
            s = sum(res)
            lo = floor(Fraction(rng[0] - s, d)) - 1
            hi = ceil(Fraction(rng[1] - s, d)) + 1
            g = certify_pqp(sub, weight, (lo, hi))
            total = pqp_add(total, affine_pullback(g, s, d))
    return total


# ============================================================================
# difference equations and unipotent shifts


def solve_difference(m: int, d: int, samples: Mapping[int, object]) -> QuasiPoly:
    """Per-residue polynomials of degree <= m-1 for data annihilated by
    sum_i (-1)^i binom(m, i) f(n + i d)."""
    if m < 1 or d < 1:
        raise InputError("order and step must be positive")
    keys = sorted(samples)
    branches = []
    for r in range(d):
        pts = [n for n in keys if n % d == r]
        run = _longest_run(pts, d)
        if len(run) < m:
            raise InputError(f"residue {r} mod {d} has fewer than {m} consecutive samples")
        for n in pts:
            window = [n + i * d for i in range(m + 1)]
            if all(x in samples for x in window):
                acc = 0
                for i, x in enumerate(window):
                    acc = acc + samples[x] * ((-1) ** i * comb(m, i))
                if not is_zero(acc):
                    raise NotQuasiPolynomialError("annihilator fails on the sample", n)
        train = run[:m]
        poly = interpolate(train, [samples[n] for n in train])
        for n in pts:
            if poly_eval(poly, n) != samples[n]:
                raise NotQuasiPolynomialError("sample is not on the interpolating polynomial", n)
        branches.append(poly)
    return QuasiPoly.from_branches(d, branches)


def _longest_run(pts: list[int], d: int) -> list[int]:
    best: list = []
    cur: list = []
    for n in pts:
        if cur and n == cur[-1] + d:
            cur.append(n)
        else:
            cur = [n]
        if len(cur) > len(best):
            best = list(cur)
    return best


def _sparse(mat: Sequence[Sequence]) -> dict:
    rows = {i: {j: Fraction(x) for j, x in enumerate(row) if x} for i, row in enumerate(mat)}
    return {i: row for i, row in rows.items() if row}


def _sp_mul(a: dict, b: dict) -> dict:
    out = {}
    for i, row in a.items():
        acc: dict = {}
        for k, x in row.items():
            for j, y in b.get(k, {}).items():
                acc[j] = acc.get(j, 0) + x * y
        acc = {j: v for j, v in acc.items() if v}
        if acc:
            out[i] = acc
    return out


def _sp_apply(a: dict, v: Sequence) -> list:
    n = len(v)
    out = [Fraction(0)] * n
    for i, row in a.items():
        out[i] = sum((x * v[j] for j, x in row.items()), Fraction(0))
    return out


def _id_minus(mat: Sequence[Sequence]) -> dict:
    n = len(mat)
    if any(len(row) != n for row in mat):
        raise InputError("matrix must be square")
    return _sparse([[(1 if i == j else 0) - Fraction(mat[i][j]) for j in range(n)] for i in range(n)])


def nilpotency_order(J: Sequence[Sequence], cap: int | None = None) -> int:
    """Least m with (id - J)^m = 0."""
    n = len(J)
    cap = cap if cap is not None else max(n, 1)
    a = _id_minus(J)
    power = a
    m = 1
    while power:
        if m >= cap:
            raise NotUnipotentError(f"(id - J)^m is nonzero for every m <= {cap}", m)
        power = _sp_mul(power, a)
        m += 1
    return m


def shift_to_qp(J: Sequence[Sequence], d: int, f0: Sequence[Sequence], n0: int = 0,
                rng: tuple[int, int] | None = None, basis: Sequence | None = None,
                cap: int | None = None) -> QuasiPoly:
    """Solve f(n + d) = J f(n) from the values f(n0), ..., f(n0 + d - 1).

    Values are coordinate vectors; the result is a QuasiPoly with Vec values
    keyed by ``basis`` (default: coordinate indices).  When ``rng`` is given
    the result is compared with step-by-step propagation over it.
    """
    if len(f0) != d:
        raise InputError(f"need {d} initial values, got {len(f0)}")
    size = len(J)
    basis = list(basis) if basis is not None else list(range(size))
    m = nilpotency_order(J, cap)
    nil = _sparse([[Fraction(J[i][j]) - (1 if i == j else 0) for j in range(size)] for i in range(size)])

    def as_vec(v):
        return Vec({basis[i]: x for i, x in enumerate(v)})

    branches: dict = {}
    for i in range(d):
        start = n0 + i
        vecs = [[Fraction(x) for x in f0[i]]]
        for _ in range(1, m):
            vecs.append(_sp_apply(nil, vecs[-1]))
        poly: tuple = ()
        for j, v in enumerate(vecs):
            # binom(k, j) with k = (n - start) / d
            bj = poly_compose_affine(binomial_poly(j), Fraction(1, d), Fraction(-start, d))
            poly = poly_add(poly, tuple(as_vec(v) * c for c in bj))
        branches[start % d] = poly
    qp = QuasiPoly.from_branches(d, [branches[r] for r in range(d)])
    if rng is not None:
        _check_propagation(qp, J, d, f0, n0, rng, m, as_vec)
    return qp


def _check_propagation(qp, J, d, f0, n0, rng, m, as_vec):
    size = len(J)
    jm = _sparse(J)
    # inverse of a unipotent J: sum_{j < m} (id - J)^j
    a = _id_minus(J)
    inv = {i: {i: Fraction(1)} for i in range(size)}
    power = {i: {i: Fraction(1)} for i in range(size)}
    for _ in range(1, m):
        power = _sp_mul(power, a)
        for r, row in power.items():
            tgt = inv.setdefault(r, {})
            for c, x in row.items():
                tgt[c] = tgt.get(c, 0) + x
    lo, hi = rng
    for i in range(d):
        fwd = [Fraction(x) for x in f0[i]]
        n = n0 + i
        while n <= hi:
            if n >= lo and qp(n) != as_vec(fwd):
                raise CertificationError("shift solution disagrees with propagation", n)
            fwd = _sp_apply(jm, fwd)
            n += d
        back = [Fraction(x) for x in f0[i]]
        n = n0 + i
        while n >= lo:
            if n <= hi and qp(n) != as_vec(back):
                raise CertificationError("shift solution disagrees with propagation", n)
            back = _sp_apply(inv, back)
            n -= d
