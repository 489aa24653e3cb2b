"""Wall-crossing engine: DT invariants under a change of Kähler vector, the
pair-invariant recursion, and certified rational generating functions.

Module values are label-free :class:`Vec` elements keyed by
``(monomial, t-degree, s-power)``; a class label is attached only while
brackets are evaluated.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, floor
from typing import Callable, Iterator, Mapping, Sequence

from .classlat import (
    GeometryModel,
    KClass,
    factors,
    is_superpositive,
    split_count,
    sub_beta,
)
from .errors import CertificationError, ConfigError, InputError, NotQuasiPolynomialError, RecursionWindowError
from .exact import Vec, divisors, is_zero, lcm
from .quasipoly import Chamber, QuasiPoly, solve_difference
from .ratgen import RationalGF, gf_expand, normalize, pole_locations, poles_are_admissible, qp_tail_to_gf
from .stability import PairCondition, SlopeCondition
from .vertexmodel import (
    VertexConfig,
    attach_label,
    bracket_case,
    forget_label,
    kernel_check,
    lifted_bracket,
    lifted_bracket_general,
    proj_e0,
)
from .wallcoeffs import coeff_Utilde

log = logging.getLogger(__name__)

RATIONAL_DT_DEGREE = 6


def dt_degree_bound(truncation: int | None) -> int:
    """Per-residue degree allowed for DT input."""
    if truncation is None:
        return RATIONAL_DT_DEGREE
    return (truncation + 1) * (3 * (2 + truncation) + 1) - 1


# ----------------------------------------------------------------------------
# input data


class DTInput:
    """DT values per curve class, each a quasi-polynomial in n with Vec values."""

    def __init__(self, geometry: GeometryModel, tables: Mapping, truncation: int | None = None):
        self.geometry = geometry
        self.truncation = truncation
        self.tables: dict[tuple, QuasiPoly] = {}
        bound = dt_degree_bound(truncation)
        for beta, qp in tables.items():
            beta = geometry.check(beta)
            where = f"dt[{list(beta)}]"
            if not is_superpositive(beta, geometry):
                raise ConfigError("DT input is only defined for superpositive classes", where)
            if qp.nvars != 1:
                raise ConfigError("DT input must be a one-variable quasi-polynomial", where)
            d_beta = geometry.degree(beta)
            if d_beta % qp.period:
                raise ConfigError(f"period {qp.period} does not divide d_beta = {d_beta}", where)
            if qp.degree() > bound:
                raise ConfigError(f"degree {qp.degree()} exceeds the bound {bound}", where)
            self.tables[beta] = qp

    def value(self, beta: Sequence[int], n: int) -> Vec:
        beta = tuple(beta)
        if beta not in self.tables:
            raise ConfigError(f"no DT input for class {list(beta)}")
        v = self.tables[beta](n)
        return v if isinstance(v, Vec) else Vec()


@dataclass
class InsertionFunctional:
    """A linear functional on module values, with a cohomological degree tag."""

    coeffs: Mapping  # basis key (mono, tdeg, spow) -> Fraction
    degree: int = 0

    def __call__(self, value) -> Fraction:
        if is_zero(value):
            return Fraction(0)
        return sum((Fraction(c) * value.get(k, 0) for k, c in self.coeffs.items()), Fraction(0))

    def check_ring(self, truncation: int | None):
        if truncation is not None and truncation < self.degree:
            raise InputError(f"functional of degree {self.degree} needs truncation level >= {self.degree}, got {truncation}")


def apply_insertion(fn: InsertionFunctional, series, truncation: int | None = None):
    """Apply ``fn`` coefficientwise to a RationalGF or to a map n -> value."""
    fn.check_ring(truncation)
    if isinstance(series, RationalGF):
        return series.map_coeffs(fn)
    return {n: fn(v) for n, v in series.items()}


@dataclass
class Scenario:
    """Everything the engine needs about one model threefold."""

    geometry: GeometryModel
    config: VertexConfig
    dt: DTInput
    point_class: Vec
    thresholds: dict = field(default_factory=dict)  # beta -> C_beta
    vanishing: dict = field(default_factory=dict)  # beta -> M_beta
    middle: dict = field(default_factory=dict)  # (beta, n) -> Vec
    name: str = "scenario"
    tail_samples: int = 48
    queries: list = field(default_factory=list)

    @property
    def truncation(self) -> int | None:
        return self.config.ring.truncation

    def threshold(self, beta) -> Fraction:
        beta = tuple(beta)
        if beta not in self.thresholds:
            raise ConfigError(f"no threshold C_beta for class {list(beta)}")
        return self.thresholds[beta]

    def vanishing_bound(self, beta) -> int:
        beta = tuple(beta)
        if beta not in self.vanishing:
            raise ConfigError(f"no vanishing bound M_beta for class {list(beta)}")
        return self.vanishing[beta]


class Memo:
    """Thread-safe memo table with at-most-once insertion per key."""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._data: dict = {}
        self._lock = threading.Lock()

    def get(self, key):
        if not self.enabled:
            return None
        with self._lock:
            return self._data.get(key)

    def put(self, key, value):
        if not self.enabled:
            return value
        with self._lock:
            return self._data.setdefault(key, value)

    def __len__(self):
        return len(self._data)


# ----------------------------------------------------------------------------
# enumeration helpers


def _vector_partitions(beta: tuple, max_part: tuple | None = None) -> Iterator[tuple]:
    """Multisets of nonzero nonnegative vectors summing to beta, parts non-increasing."""
    if not any(beta):
        yield ()
        return
    from itertools import product

    for part in sorted(product(*(range(x + 1) for x in beta)), reverse=True):
        if not any(part) or (max_part is not None and part > max_part):
            continue
        rest = tuple(x - y for x, y in zip(beta, part))
        for tail in _vector_partitions(rest, part):
            yield (part,) + tail


def _bounded_compositions(total: int, lows: Sequence[int], highs: Sequence[int | None],
                          groups: Sequence[int]) -> Iterator[tuple]:
    """Integer tuples with sum ``total``, lows[i] <= x_i <= highs[i], and
    x non-decreasing inside each run of equal ``groups`` labels."""
    k = len(lows)
    if k == 0:
        if total == 0:
            yield ()
        return
    suffix_low = [0] * (k + 1)
    for i in range(k - 1, -1, -1):
        suffix_low[i] = suffix_low[i + 1] + lows[i]

    def rec(i: int, remaining: int, prev: int | None):
        if i == k - 1:
            x = remaining
            if x >= lows[i] and (highs[i] is None or x <= highs[i]) and (prev is None or groups[i] != groups[i - 1] or x >= prev):
                yield (x,)
            return
        lo = lows[i]
        if prev is not None and groups[i] == groups[i - 1]:
            lo = max(lo, prev)
        hi = remaining - suffix_low[i + 1]
        if highs[i] is not None:
            hi = min(hi, highs[i])
        for x in range(lo, hi + 1):
            for rest in rec(i + 1, remaining - x, x):
                yield (x,) + rest

    yield from rec(0, total, None)


def nested_bracket(word: Sequence[KClass], values: Callable[[KClass], Vec], config: VertexConfig) -> Vec:
    """[[...[x_1, x_2], ...], x_k] with the three-case lifted bracket."""
    label = word[0]
    acc = attach_label(values(word[0]), label)
    for cls in word[1:]:
        if not acc:
            return Vec()
        case = bracket_case(label, cls)
        acc = lifted_bracket(acc, attach_label(values(cls), cls), case, config)
        label = label + cls
    return forget_label(acc)


@dataclass
class RecursionRecord:
    beta: tuple
    n: int
    c_minus: Fraction
    c_plus: Fraction
    multisets: int
    terms: int
    value: Vec
    residual_ok: bool


# ----------------------------------------------------------------------------
# the engine


class WallCrossEngine:
    """Evaluates wall-crossing sums for one scenario; holds the recursion memo."""

    def __init__(self, scenario: Scenario, memo: bool = True):
        self.scenario = scenario
        self.geometry = scenario.geometry
        self.config = scenario.config
        self.memo = Memo(memo)
        self._u_cache: dict = {}
        self.records: list[RecursionRecord] = []
        self._records_lock = threading.Lock()

    # -- basic values ---------------------------------------------------
    def dt_value(self, beta, n: int) -> Vec:
        return self.scenario.dt.value(beta, n)

    def slope(self, beta, n: int) -> Fraction:
        return Fraction(n) / self.geometry.omega_dot(beta)

    def window(self, beta) -> tuple[int, Fraction]:
        """(M_beta, C_beta * omega.beta): zero for n <= M, recursion for n > the second."""
        beta = tuple(beta)
        return self.scenario.vanishing_bound(beta), self.scenario.threshold(beta) * self.geometry.omega_dot(beta)

    def pt_value(self, beta, n: int) -> Vec:
        """The pair class for (beta, n): vanishing, configured middle value, or recursion."""
        beta = tuple(beta)
        if not any(beta):
            return self.scenario.point_class if n == 0 else Vec()
        M, top = self.window(beta)
        if n <= M:
            return Vec()
        if n <= top:
            key = (beta, n)
            if key in self.scenario.middle:
                return self.scenario.middle[key]
            raise RecursionWindowError(
                f"recursion not applicable at n={n} for class {list(beta)}: {M} < n <= {top} and no configured value"
            )
        return self.pt_recursion_step(beta, n)

    # -- wall levels ----------------------------------------------------
    def c_minus(self, beta, n: int) -> Fraction:
        """A level just below the slope of (beta, n), above C_beta and every lower sheaf slope."""
        beta = tuple(beta)
        mu = self.slope(beta, n)
        P = max(self.geometry.omega_dot(g).numerator for g in factors(beta, self.geometry))
        gap = mu - self.scenario.threshold(beta)
        return mu - min(Fraction(1, 2 * P * P), gap / 2)

    # -- multisets for the pair recursion --------------------------------
    def recursion_multisets(self, beta, n: int, c_minus: Fraction) -> list[tuple[KClass, ...]]:
        """Multisets {(1, beta_j, n_j)} + sheaf classes with k >= 2 that can carry a
        nonzero coefficient.  Sheaf slopes must exceed c_minus; pair parts
        need n_j > M_{beta_j} (or are the point class)."""
        beta = tuple(beta)
        geo = self.geometry
        out = []
        zero = geo.zero()
        candidates = [zero] + [g for g in factors(beta, geo) if g != beta]
        for bj in candidates:
            rest = sub_beta(beta, bj)
            if not any(rest):
                continue
            if any(bj):
                nj_low = self.scenario.vanishing_bound(bj) + 1
                nj_fixed = None
            else:
                nj_low = nj_fixed = 0
            for parts in _vector_partitions(rest):
                lows = [floor(c_minus * geo.omega_dot(p)) + 1 for p in parts]
                # order sheaf parts increasingly so equal betas are adjacent
                order = sorted(range(len(parts)), key=lambda i: parts[i])
                parts_sorted = [parts[i] for i in order]
                lows_sorted = [lows[i] for i in order]
                groups = [parts_sorted.index(p) for p in parts_sorted]
                sheaf_low = sum(lows_sorted)
                nj_values = [nj_fixed] if nj_fixed is not None else range(nj_low, n - sheaf_low + 1)
                for nj in nj_values:
                    for ns in _bounded_compositions(n - nj, lows_sorted, [None] * len(parts_sorted), groups):
                        sheaves = tuple(KClass(0, p, m) for p, m in zip(parts_sorted, ns))
                        out.append(sheaves + (KClass(1, bj, nj),))
        log.debug("pair recursion for %s, n=%s: %d multisets, sheaf slopes > %s, pair parts n_j > M",
                  list(beta), n, len(out), c_minus)
        return out

    def c_plus(self, beta, n: int, multisets) -> Fraction:
        top = self.slope(beta, n)
        for ms in multisets:
            for cls in ms:
                if cls.d == 0:
                    top = max(top, self.slope(cls.beta, cls.n))
        return floor(top) + 1

    def _words(self, multiset, tau, tau_t, key):
        ck = (key, multiset)
        if ck not in self._u_cache:
            self._u_cache[ck] = coeff_Utilde(multiset, tau, tau_t)
        return self._u_cache[ck]

    def recursion_sum(self, beta, n: int):
        """(sum over k >= 2 of coefficient * bracket, c_minus, c_plus, #multisets, #terms)."""
        beta = tuple(beta)
        geo = self.geometry
        cm = self.c_minus(beta, n)
        multisets = self.recursion_multisets(beta, n, cm)
        cp = self.c_plus(beta, n, multisets)
        tau = PairCondition(geo, cp)
        tau_t = PairCondition(geo, cm)
        k_split = split_count(beta, geo)
        total = Vec()
        terms = 0

        def values(cls: KClass) -> Vec:
            if cls.d == 1:
                if any(cls.beta) and split_count(cls.beta, geo) >= k_split:
                    raise CertificationError("recursion does not decrease the split count", (beta, cls))
                return self.pt_value(cls.beta, cls.n)
            return self.dt_value(cls.beta, cls.n)

        for ms in multisets:
            # skip multisets with a vanishing input before touching coefficients
            if any(is_zero(self.dt_value(c.beta, c.n)) for c in ms if c.d == 0):
                continue
            pair = ms[-1]
            if is_zero(values(pair)):
                continue
            words = self._words(ms, tau, tau_t, ("pair", cm, cp))
            for word, coeff in sorted(words.items()):
                if not coeff:
                    continue
                br = nested_bracket(word, values, self.config)
                if br:
                    total = total + br * coeff
                    terms += 1
        return total, cm, cp, len(multisets), terms

    def level_choice_changes(self, beta, n: int) -> list[tuple[KClass, ...]]:
        """Multisets whose bracket coefficients move when the wall levels are
        replaced by another admissible pair (c_minus halfway up to the slope,
        c_plus one higher).  Empty means the coefficients only see the chamber."""
        beta = tuple(beta)
        geo = self.geometry
        cm = self.c_minus(beta, n)
        multisets = self.recursion_multisets(beta, n, cm)
        cp = self.c_plus(beta, n, multisets)
        first = (PairCondition(geo, cp), PairCondition(geo, cm))
        second = (PairCondition(geo, cp + 1), PairCondition(geo, (cm + self.slope(beta, n)) / 2))
        return [ms for ms in multisets if coeff_Utilde(ms, *first) != coeff_Utilde(ms, *second)]

    def kernel_survey(self, n_values=range(-3, 4)) -> tuple[int, list]:
        """Bracket kernel parts of DT values with the general lifted bracket and
        count how often R kills the result.

        The R constant of a sheaf class is its degree L.beta.  Returns
        (number of cases, list of (class, class) pairs that leave the kernel).
        """
        geo = self.geometry
        inputs = []
        for beta in sorted(self.scenario.dt.tables):
            for n in n_values:
                value = self.dt_value(beta, n)
                if not is_zero(value):
                    c = geo.degree(beta)
                    inputs.append((KClass(0, beta, n), proj_e0(attach_label(value, KClass(0, beta, n)), c), c))
        cases, misses = 0, []
        for a, u, ca in inputs:
            for b, v, cb in inputs:
                out = lifted_bracket_general(u, v, ca, ca + cb, self.config)
                cases += 1
                if not kernel_check(out, ca + cb):
                    misses.append((a, b))
        return cases, misses

    def pt_recursion_step(self, beta, n: int) -> Vec:
        """The pair class of (beta, n) from the recursion; needs n > C_beta * omega.beta."""
        beta = self.geometry.check(beta)
        if not is_superpositive(beta, self.geometry):
            raise InputError(f"class {list(beta)} is not superpositive")
        M, top = self.window(beta)
        if n <= top:
            raise RecursionWindowError(f"recursion needs n > {top} for class {list(beta)}, got n={n}")
        cached = self.memo.get((beta, n))
        if cached is not None:
            return cached
        total, cm, cp, nms, nterms = self.recursion_sum(beta, n)
        singleton = coeff_Utilde([KClass(1, beta, n)], PairCondition(self.geometry, cp), PairCondition(self.geometry, cm))
        coeff = singleton.get((KClass(1, beta, n),), 0)
        if coeff != 1:
            raise CertificationError("singleton coefficient differs from 1", (beta, n, coeff))
        value = -total / coeff
        residual = value * coeff + total
        record = RecursionRecord(beta, n, cm, cp, nms, nterms, value, not residual)
        if residual:
            raise CertificationError("k = 1 term plus the k >= 2 sum is nonzero", (beta, n))
        with self._records_lock:
            self.records.append(record)
        return self.memo.put((beta, n), value)

    def eq_residual(self, beta, n: int) -> Vec:
        """Recompute the full sum over k >= 1 with the stored pair class plugged
        in for the k = 1 term; the result must vanish."""
        beta = tuple(beta)
        value = self.pt_recursion_step(beta, n)
        total, cm, cp, _nms, _nt = self.recursion_sum(beta, n)
        single = coeff_Utilde([KClass(1, beta, n)], PairCondition(self.geometry, cp), PairCondition(self.geometry, cm))
        return value * single.get((KClass(1, beta, n),), 0) + total

    # -- DT wall-crossing -----------------------------------------------
    def dt_slope_hull(self, beta, n: int, omega_new) -> tuple[Fraction, Fraction]:
        geo = self.geometry
        t1 = slope_mu_plain(beta, n, geo.omega, geo)
        t2 = slope_mu_plain(beta, n, omega_new, geo)
        ratios = [Fraction(a) / b for a, b in zip(omega_new, geo.omega)]
        cands = [t1, t2 * min(ratios), t2 * max(ratios)]
        return min(cands), max(cands)

    def dt_multisets(self, beta, n: int, omega_new, hull=None) -> list[tuple[KClass, ...]]:
        """Multisets of sheaf classes summing to (beta, n) whose omega-slopes lie in the hull."""
        beta = tuple(beta)
        geo = self.geometry
        lo, hi = hull or self.dt_slope_hull(beta, n, omega_new)
        out = []
        for parts in _vector_partitions(beta):
            parts_sorted = sorted(parts)
            w = [geo.omega_dot(p) for p in parts_sorted]
            lows = [ceil(lo * x) for x in w]
            highs = [floor(hi * x) for x in w]
            groups = [parts_sorted.index(p) for p in parts_sorted]
            for ns in _bounded_compositions(n, lows, highs, groups):
                out.append(tuple(KClass(0, p, m) for p, m in zip(parts_sorted, ns)))
        log.debug("DT wall-crossing for %s, n=%s: omega-slopes bounded to [%s, %s], %d multisets",
                  list(beta), n, lo, hi, len(out))
        return out

    def dt_wallcross(self, beta, n: int, omega_new, hull=None) -> Vec:
        beta = self.geometry.check(beta)
        if not is_superpositive(beta, self.geometry):
            raise InputError(f"class {list(beta)} is not superpositive")
        omega_new = tuple(Fraction(x) for x in omega_new)
        if len(omega_new) != self.geometry.rank or any(x <= 0 for x in omega_new):
            raise InputError("new Kähler vector must have positive components", "omega_new")
        tau = SlopeCondition(self.geometry)
        tau_t = SlopeCondition(self.geometry, omega_new)
        total = Vec()
        for ms in self.dt_multisets(beta, n, omega_new, hull):
            if any(not is_superpositive(c.beta, self.geometry) for c in ms):
                continue
            if any(is_zero(self.dt_value(c.beta, c.n)) for c in ms):
                continue
            words = self._words(ms, tau, tau_t, ("dt", omega_new))
            for word, coeff in sorted(words.items()):
                if coeff:
                    total = total + nested_bracket(word, lambda c: self.dt_value(c.beta, c.n), self.config) * coeff
        return total

    # -- generating functions -------------------------------------------
    def pt_series(self, beta, samples: int | None = None):
        """Certified rational generating function of n -> pair class of (beta, n)."""
        beta = self.geometry.check(beta)
        if not is_superpositive(beta, self.geometry):
            raise InputError(f"class {list(beta)} is not superpositive")
        M, top = self.window(beta)
        n0 = floor(top) + 1
        count = samples or self.scenario.tail_samples
        values = {m: self.pt_recursion_step(beta, m) for m in range(n0, n0 + count)}
        period_bound = lcm(*(self.geometry.degree(g) for g in factors(beta, self.geometry)),
                           *(self.scenario.dt.tables[g].period for g in factors(beta, self.geometry)
                             if g in self.scenario.dt.tables))
        tail, fit = _fit_tail(values, period_bound)
        # walk back to the first n from which the tail reproduces every sample
        start = n0 + count - 1
        while start - 1 >= n0 and tail(start - 1) == values[start - 1]:
            start -= 1
        exceptional = {}
        for m in range(M + 1, start):
            v = values[m] if m in values else self.pt_value(beta, m)
            if not is_zero(v):
                exceptional[m] = v
        gf = qp_tail_to_gf(M, exceptional, tail, max(start, M + 1))
        expansion = gf_expand(gf, n0 + count - 1, M - 2)
        for m, v in expansion.items():
            want = Vec() if m <= M else (values[m] if m in values else self.pt_value(beta, m))
            if v != want:
                raise CertificationError("generating function does not re-expand to the samples", m)
        poles = pole_locations(gf)
        if not poles_are_admissible(poles):
            raise CertificationError("pole outside {0} and the roots of unity", poles)
        a, D, E, _num = normalize(gf)
        cert = {
            "class": list(beta),
            "vanishing_bound": M,
            "recursion_from": n0,
            "tail_from": start,
            "samples": (n0, n0 + count - 1),
            "period": tail.period,
            "degrees": [len(tail.branch(r)) - 1 for r in range(tail.period)],
            "difference_order": fit["order"],
            "period_bound": period_bound,
            "chambers": [
                Chamber.interval(None, M).text() + ": 0",
            ] + [f"n = {m}: singleton" for m in range(M + 1, start)]
              + [Chamber.interval(start, None).text() + ": quasi-polynomial"],
            "denominator": {"q_power": a, "period": D, "exponent": E},
            "poles": poles,
        }
        return gf, cert


def slope_mu_plain(beta, n: int, omega, geometry: GeometryModel) -> Fraction:
    return Fraction(n) / geometry.omega_dot(beta, omega)


def _fit_tail(values: dict, period_bound: int):
    """Smallest (period, order) whose difference equation fits the upper half of the samples."""
    keys = sorted(values)
    block_keys = keys[len(keys) // 2:]
    block = {n: values[n] for n in block_keys}
    for d in divisors(period_bound):
        per_residue = len(block_keys) // d
        for m in range(1, per_residue - 1):
            try:
                qp = solve_difference(m, d, block)
            except (NotQuasiPolynomialError, InputError):
                continue
            return qp, {"order": m, "block": (block_keys[0], block_keys[-1])}
    raise CertificationError("no quasi-polynomial tail fits the sampled pair classes",
                             {"samples": (keys[0], keys[-1]), "period_bound": period_bound})


# ----------------------------------------------------------------------------
# module-level conveniences


def _engine(scenario: Scenario, memo: bool = True) -> WallCrossEngine:
    eng = getattr(scenario, "_engine", None)
    if eng is None or eng.memo.enabled != memo:
        eng = WallCrossEngine(scenario, memo)
        scenario._engine = eng  # type: ignore[attr-defined]
    return eng


def dt_wallcross(beta, n: int, omega_new, scenario: Scenario) -> Vec:
    return _engine(scenario).dt_wallcross(beta, n, omega_new)


def pt_recursion_step(beta, n: int, scenario: Scenario) -> Vec:
    return _engine(scenario).pt_value(beta, n)


def pt_series(beta, scenario: Scenario, samples: int | None = None):
    return _engine(scenario).pt_series(beta, samples)
