"""A small graded vertex-algebra model with translation operator D and its partner R.

Elements are finite sums of terms ``coeff * (monomial) * t^tdeg * s^spow`` tagged
with a class label.  On t-degree 0 ("base") terms the state-field map is

    Y(p, z) q = sign(a, b) * sum_i z^(chi_sym(a, b) - i) * w_i(a, b; n', n'') * (p q)

with weights read from a :class:`WeightTable`, and it is extended to higher
t-degree by the translation rules Y(Du, z) = d/dz Y(u, z) and
Y(u, z) Dv = D Y(u, z) v - d/dz Y(u, z) v.  The mode u_k is the coefficient of
z^(-k-1).

Weight convention: an entry for an ordered pair of class types determines the
reversed order through w_i(b, a; n'', n') = (-1)^i w_i(a, b; n', n''), the rule
satisfied by Chern classes of a dual complex.  Together with a sign function
whose two orders add up to chi_sym this makes the bracket u_0(v) antisymmetric
modulo the image of D.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from .classlat import GeometryModel, KClass, euler_split, euler_sym
from .coeffring import CoeffRing
from .errors import ConfigError, InputError
from .exact import Vec, falling, fraction_text


class Term(NamedTuple):
    label: KClass
    mono: tuple[str, ...]
    tdeg: int
    spow: int = 0


class ModeElement(Vec):
    """A finite sum of :class:`Term` keys with rational coefficients."""


@dataclass(frozen=True)
class BaseSymbol:
    name: str
    hdeg: int
    class_label: KClass | None = None


def base_element(mono: Iterable[str], label: KClass, coeff=1, tdeg: int = 0, spow: int = 0) -> ModeElement:
    return ModeElement({Term(label, tuple(sorted(mono)), tdeg, spow): coeff})


def zero_class(rank: int) -> KClass:
    return KClass(0, (0,) * rank, 0)


# --------------------------------------------------------------------------
# weight tables

WeightPoly = dict  # {(e1, e2, spow): Fraction}, polynomial in (n', n'') with s-coefficients


def _type(c: KClass) -> tuple:
    return (c.d, tuple(c.beta))


def _swap(poly: WeightPoly, i: int) -> WeightPoly:
    sign = -1 if i % 2 else 1
    return {(e2, e1, s): sign * c for (e1, e2, s), c in poly.items()}


def _check_poly(poly: WeightPoly, i: int, where: str) -> WeightPoly:
    out = {}
    for key, c in poly.items():
        e1, e2, s = key
        if min(e1, e2, s) < 0:
            raise ConfigError("negative exponent in weight polynomial", where)
        if e1 + e2 > i:
            raise ConfigError(f"weight w_{i} has a term of degree {e1 + e2} > {i}", where)
        c = Fraction(c)
        if c:
            out[(e1, e2, s)] = out.get((e1, e2, s), 0) + c
    return {k: v for k, v in out.items() if v}


class WeightTable:
    """Weights w_i (i >= 1) per ordered pair of class types (d, beta); w_0 = 1.

    ``entries`` maps ``((d, beta), (d', beta'))`` to ``{i: WeightPoly}``; the
    optional ``default`` applies to every pair without an entry, read in the
    orientation where the first type is the smaller one.
    """

    def __init__(self, entries: Mapping | None = None, default: Mapping | None = None):
        self._entries: dict = {}
        for (ta, tb), polys in (entries or {}).items():
            ta, tb = (ta[0], tuple(ta[1])), (tb[0], tuple(tb[1]))
            where = f"weights[{ta}, {tb}]"
            checked = {int(i): _check_poly(p, int(i), where) for i, p in polys.items()}
            if any(i < 1 for i in checked):
                raise ConfigError("weight indices start at 1 (w_0 = 1 is implicit)", where)
            if ta > tb:
                ta, tb = tb, ta
                checked = {i: _swap(p, i) for i, p in checked.items()}
            key = (ta, tb)
            if key in self._entries:
                prev = self._entries[key]
                if any(prev.get(i, {}) != checked.get(i, {}) for i in set(prev) | set(checked)):
                    raise ConfigError("both orders given with inconsistent values", where)
            self._entries[key] = checked
            if ta == tb:
                self._check_self_pair(checked, where)
        self._default = None
        if default is not None:
            where = "weights.default"
            self._default = {int(i): _check_poly(p, int(i), where) for i, p in default.items()}
            self._check_self_pair(self._default, where)

    @staticmethod
    def _check_self_pair(polys: dict, where: str):
        for i, p in polys.items():
            if _swap(p, i) != p:
                raise ConfigError(
                    f"w_{i} for a pair of equal types must satisfy w(n'', n') = (-1)^{i} w(n', n'')", where
                )

    def polys_for(self, a: KClass, b: KClass) -> dict:
        """The weight polynomials for the ordered pair, as {i: WeightPoly} in (n_a, n_b)."""
        ta, tb = _type(a), _type(b)
        if (ta, tb) in self._entries:
            return self._entries[(ta, tb)]
        if (tb, ta) in self._entries:
            return {i: _swap(p, i) for i, p in self._entries[(tb, ta)].items()}
        if self._default is not None:
            if ta <= tb:
                return self._default
            return {i: _swap(p, i) for i, p in self._default.items()}
        raise ConfigError(f"no weight entry for the class pair {a}, {b}")

    def weight(self, i: int, a: KClass, b: KClass) -> dict:
        """w_i(a, b; n_a, n_b) as a ring element {spow: Fraction}."""
        if i == 0:
            return {0: Fraction(1)}
        if _is_vacuum(a) or _is_vacuum(b):
            return {}
        poly = self.polys_for(a, b).get(i, {})
        out: dict = {}
        for (e1, e2, s), c in poly.items():
            out[s] = out.get(s, 0) + c * Fraction(a.n) ** e1 * Fraction(b.n) ** e2
        return {s: c for s, c in out.items() if c}

    def max_index(self, a: KClass, b: KClass) -> int:
        if _is_vacuum(a) or _is_vacuum(b):
            return 0
        return max(self.polys_for(a, b), default=0)

    def max_degree(self) -> int:
        """Largest total degree in (n', n'') appearing anywhere in the table."""
        polys = [p for e in self._entries.values() for p in e.values()]
        if self._default:
            polys += list(self._default.values())
        return max((e1 + e2 for p in polys for (e1, e2, _s) in p), default=0)


def _is_vacuum(c: KClass) -> bool:
    return c.d == 0 and c.n == 0 and not any(c.beta)


# --------------------------------------------------------------------------
# configuration


@dataclass(eq=False)
class VertexConfig:
    """Everything the state-field map needs beyond the elements themselves.

    ``parity`` is ``"split"`` (sign from an unsymmetrized Euler form whose
    symmetrization is chi_sym), ``"sym"`` (chi_sym mod 2), ``"even"``, or a
    callable ``(a, b) -> int``.
    """

    geometry: GeometryModel
    weights: WeightTable
    symbols: Mapping[str, int]
    ring: CoeffRing = field(default_factory=CoeffRing)
    parity: str | Callable[[KClass, KClass], int] = "split"

    def __post_init__(self):
        if isinstance(self.parity, str) and self.parity not in ("split", "sym", "even"):
            raise ConfigError(f"unknown parity rule {self.parity!r}", "vertex.parity")

    def sign(self, a: KClass, b: KClass) -> int:
        if callable(self.parity):
            p = self.parity(a, b)
        elif self.parity == "split":
            p = euler_split(a, b, self.geometry)
        elif self.parity == "sym":
            p = euler_sym(a, b, self.geometry)
        else:
            p = 0
        return -1 if p % 2 else 1

    def hdeg(self, mono: Sequence[str]) -> int:
        total = 0
        for name in mono:
            if name not in self.symbols:
                raise ConfigError(f"unknown base symbol {name!r}")
            total += self.symbols[name]
        return total

    def term_hdeg(self, term: Term) -> int:
        return self.hdeg(term.mono) + 2 * term.tdeg - 2 * term.spow


# --------------------------------------------------------------------------
# D, R and the projection


def op_D(u: ModeElement) -> ModeElement:
    return ModeElement({t._replace(tdeg=t.tdeg + 1): c for t, c in u.items()})


def op_D_power(u: ModeElement, k: int) -> ModeElement:
    if k == 0:
        return u
    return ModeElement({t._replace(tdeg=t.tdeg + k): c for t, c in u.items()})


def op_R(u: ModeElement, c) -> ModeElement:
    c = Fraction(c)
    return ModeElement({t._replace(tdeg=t.tdeg - 1): c * t.tdeg * x for t, x in u.items() if t.tdeg > 0})


def proj_e0(u: ModeElement, c) -> ModeElement:
    """Projection onto the kernel of R along the image of D."""
    c = Fraction(c)
    if c == 0:
        raise ZeroDivisionError("projection needs a nonzero R constant")
    top = max((t.tdeg for t in u), default=0)
    out = ModeElement()
    rk = u
    for k in range(top + 1):
        if k:
            rk = op_R(rk, c)
        if not rk:
            break
        out = out + op_D_power(rk, k) * (Fraction(1, factorial(k)) / (-c) ** k)
    return out


def in_d_image(u: ModeElement) -> bool:
    return all(t.tdeg >= 1 for t in u)


def d_preimage(u: ModeElement) -> ModeElement:
    """The w with D(w) = u, for u in the image of D."""
    if not in_d_image(u):
        raise InputError("element is not in the image of D")
    return ModeElement({t._replace(tdeg=t.tdeg - 1): c for t, c in u.items()})


def decompose(u: ModeElement, c) -> tuple[ModeElement, ModeElement]:
    """u = kernel part + D(w); returns (kernel part, w)."""
    k = proj_e0(u, c)
    return k, d_preimage(u - k)


# --------------------------------------------------------------------------
# the state-field map


def _base_laurent(tu: Term, tv: Term, config: VertexConfig) -> dict:
    """Y(p, z) q for the base parts of two terms: {z exponent: {spow: coeff}}."""
    a, b = tu.label, tv.label
    chi = euler_sym(a, b, config.geometry)
    sign = config.sign(a, b)
    cap = (config.hdeg(tu.mono) + config.hdeg(tv.mono) + (config.ring.truncation or 0)) // 2
    top = min(cap, config.weights.max_index(a, b))
    out = {}
    for i in range(top + 1):
        w = config.weights.weight(i, a, b)
        if w:
            out[chi - i] = {s: sign * c for s, c in w.items()}
    return out


def mode_series(u: ModeElement, v: ModeElement, config: VertexConfig) -> dict[int, ModeElement]:
    """All nonzero modes {k: u_k(v)}."""
    top = config.ring.top
    acc: dict[int, dict] = {}
    for tu, cu in u.items():
        for tv, cv in v.items():
            base = _base_laurent(tu, tv, config)
            if not base:
                continue
            label = tu.label + tv.label
            mono = tuple(sorted(tu.mono + tv.mono))
            a, b = tu.tdeg, tv.tdeg
            spow0 = tu.spow + tv.spow
            cuv = cu * cv
            for c in range(b + 1):
                pre = comb(b, c) * (-1) ** (b - c)
                order = a + b - c
                for e, wdict in base.items():
                    f = falling(e, order)
                    if not f:
                        continue
                    k = -(e - order) - 1
                    bucket = acc.setdefault(k, {})
                    for s, wc in wdict.items():
                        sp = spow0 + s
                        if sp > top:
                            continue
                        key = Term(label, mono, c, sp)
                        bucket[key] = bucket.get(key, 0) + cuv * pre * f * wc
    out = {}
    for k, terms in acc.items():
        el = ModeElement(terms)
        if el:
            out[k] = el
    return dict(sorted(out.items()))


def mode_product(u: ModeElement, v: ModeElement, k: int, config: VertexConfig) -> ModeElement:
    """u_k(v), the coefficient of z^(-k-1) in Y(u, z) v."""
    return mode_series(u, v, config).get(k, ModeElement())


def borcherds_bracket(u: ModeElement, v: ModeElement, config: VertexConfig) -> ModeElement:
    """A representative of [u, v] = u_0(v) modulo the image of D."""
    return mode_product(u, v, 0, config)


def equal_mod_d(x: ModeElement, y: ModeElement) -> bool:
    return in_d_image(x - y)


def _pair_rank(x: ModeElement, what: str) -> int:
    ds = {t.label.d for t in x}
    if len(ds) > 1:
        raise InputError(f"{what} mixes pair ranks {sorted(ds)}")
    return ds.pop() if ds else 0


def _translated_sum(modes: dict, ratio: Fraction, k_cap: int | None) -> ModeElement:
    out = ModeElement()
    for k, val in modes.items():
        if k < 0 or (k_cap is not None and k > k_cap):
            continue
        out = out + op_D_power(val, k) * (ratio ** k / factorial(k))
    return out


def lifted_bracket(u: ModeElement, v: ModeElement, case: str, config: VertexConfig,
                   k_cap: int | None = None) -> ModeElement:
    """The three-case bracket used by the pair recursion.

    (i)   both sheaf classes:      u_0(v)
    (ii)  u pair class, v sheaf:   sum_k (-1)^k / k! D^k(u_k(v))
    (iii) u sheaf, v pair class:  -sum_k (-1)^k / k! D^k(v_k(u))
    Zero elements are accepted with any case.
    """
    if not u or not v:
        return ModeElement()
    pattern = (_pair_rank(u, "first argument"), _pair_rank(v, "second argument"))
    expected = {"i": (0, 0), "ii": (1, 0), "iii": (0, 1)}
    if case not in expected:
        raise InputError(f"unknown bracket case {case!r}")
    if pattern != expected[case]:
        raise InputError(f"bracket case ({case}) does not match pair ranks {pattern}")
    if case == "i":
        if k_cap is not None and k_cap < 0:
            return ModeElement()
        return mode_product(u, v, 0, config)
    if case == "ii":
        return _translated_sum(mode_series(u, v, config), Fraction(-1), k_cap)
    return -_translated_sum(mode_series(v, u, config), Fraction(-1), k_cap)


def bracket_case(a: KClass, b: KClass) -> str:
    table = {(0, 0): "i", (1, 0): "ii", (0, 1): "iii"}
    try:
        return table[(a.d, b.d)]
    except KeyError:
        raise InputError(f"no lifted bracket for pair ranks ({a.d}, {b.d})") from None


def lifted_bracket_general(u: ModeElement, v: ModeElement, c_alpha, c_total, config: VertexConfig,
                           k_cap: int | None = None) -> ModeElement:
    """sum_k (1/k!) (-c_alpha / c_total)^k D^k(u_k(v))."""
    c_alpha, c_total = Fraction(c_alpha), Fraction(c_total)
    if c_total == 0:
        raise InputError("c of the total class vanishes; use the three-case lifted bracket instead")
    return _translated_sum(mode_series(u, v, config), -c_alpha / c_total, k_cap)


def kernel_check(x: ModeElement, c) -> bool:
    """Whether R (with constant c) annihilates x; a report, not an assertion."""
    return not op_R(x, c)


# --------------------------------------------------------------------------
# transfer to and from label-free module elements


def attach_label(vec: Vec, label: KClass) -> ModeElement:
    """Turn a label-free element {(mono, tdeg, spow): c} into a ModeElement."""
    return ModeElement({Term(label, mono, tdeg, spow): c for (mono, tdeg, spow), c in vec.items()})


def forget_label(x: ModeElement) -> Vec:
    return x.map_keys(lambda t: (t.mono, t.tdeg, t.spow))


def basis_text(key) -> str:
    mono, tdeg, spow = key
    parts = list(mono) or ["1"]
    if tdeg:
        parts.append("t" if tdeg == 1 else f"t^{tdeg}")
    if spow:
        parts.append("s" if spow == 1 else f"s^{spow}")
    return "*".join(parts)


def parse_basis(text: str, path: str = "basis") -> tuple:
    """Inverse of :func:`basis_text`, e.g. ``"D*pt*t^2*s"``."""
    mono, tdeg, spow = [], 0, 0
    for part in text.split("*"):
        part = part.strip()
        if not part:
            raise InputError(f"empty factor in {text!r}", path)
        name, _, exp = part.partition("^")
        try:
            e = int(exp) if exp else 1
        except ValueError:
            raise InputError(f"bad exponent in {text!r}", path) from None
        if e < 0:
            raise InputError(f"negative exponent in {text!r}", path)
        if name == "t":
            tdeg += e
        elif name == "s":
            spow += e
        elif name == "1":
            continue
        else:
            mono.extend([name] * e)
    return (tuple(sorted(mono)), tdeg, spow)


def element_text(x: ModeElement) -> str:
    """Canonical sorted dump, one term per line."""
    lines = []
    for t, c in sorted(x.items(), key=lambda kv: (kv[0].label, kv[0].mono, kv[0].tdeg, kv[0].spow)):
        lines.append(f"{fraction_text(c)} {basis_text((t.mono, t.tdeg, t.spow))} @ {t.label}")
    return "\n".join(lines) if lines else "0"
