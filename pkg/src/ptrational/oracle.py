"""Brute-force cross-checks for the wall-crossing engine.

These routines deliberately avoid the engine's enumeration: they walk ordered
decompositions over a box that is wider than the engine's bounds, use the raw
coefficient U(w)/len(w) for each ordered word, and pick their own wall levels.
They are slow and meant for small classes only.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import ceil, floor

from .classlat import KClass, factors, ordered_decompositions, split_count
from .exact import Vec, is_zero
from .stability import PairCondition, SlopeCondition
from .vertexmodel import attach_label, bracket_case, forget_label, lifted_bracket, mode_product
from .wallcoeffs import coeff_U
from .wallcross import Scenario


def _bracket_chain(word, values, config, pair_mode: bool) -> Vec:
    label = word[0]
    acc = attach_label(values(word[0]), label)
    for cls in word[1:]:
        if not acc:
            return Vec()
        v = attach_label(values(cls), cls)
        if pair_mode:
            acc = lifted_bracket(acc, v, bracket_case(label, cls), config)
        else:
            acc = mode_product(acc, v, 0, config)
        label = label + cls
    return forget_label(acc)


class BruteForcePT:
    """Pair classes from a literal expansion of the recursion over ordered words."""

    def __init__(self, scenario: Scenario, margin: int = 3):
        self.sc = scenario
        self.geo = scenario.geometry
        self.margin = margin
        self._memo: dict = {}
        self.terms_seen = 0

    def value(self, beta, n: int) -> Vec:
        beta = tuple(beta)
        if not any(beta):
            return self.sc.point_class if n == 0 else Vec()
        M = self.sc.vanishing[beta]
        top = self.sc.thresholds[beta] * self.geo.omega_dot(beta)
        if n <= M:
            return Vec()
        if n <= top:
            return self.sc.middle[(beta, n)]
        key = (beta, n)
        if key not in self._memo:
            self._memo[key] = -self.recursion_sum(beta, n)
        return self._memo[key]

    def recursion_sum(self, beta, n: int) -> Vec:
        geo = self.geo
        mu = Fraction(n) / geo.omega_dot(beta)
        P = max(geo.omega_dot(g).numerator for g in factors(beta, geo))
        c_minus = mu - min(Fraction(1, 3 * P * P), (mu - self.sc.thresholds[beta]) / 3)
        kmax = split_count(beta, geo) + 1
        words = []
        for k in range(2, kmax + 1):
            for j in range(k):
                for parts in ordered_decompositions(beta, k, allow_zero_at=j):
                    ranges = []
                    for i, p in enumerate(parts):
                        if i == j:
                            if any(p):
                                ranges.append(range(self.sc.vanishing[p] + 1 - self.margin, n + 1 + self.margin * k))
                            else:
                                ranges.append(range(0, 1))
                        else:
                            lo = floor(c_minus * geo.omega_dot(p)) + 1 - self.margin
                            ranges.append(range(lo, n + 1 + self.margin * k))
                    free = [i for i in range(k) if i != k - 1]
                    for head in product(*(ranges[i] for i in free)):
                        last = n - sum(head)
                        if last not in ranges[k - 1]:
                            continue
                        ns = head + (last,)
                        words.append(tuple(KClass(1 if i == j else 0, parts[i], ns[i]) for i in range(k)))
        top = mu
        for w in words:
            for c in w:
                if c.d == 0:
                    top = max(top, Fraction(c.n) / geo.omega_dot(c.beta))
        c_plus = top + 7
        tau = PairCondition(geo, c_plus)
        tau_t = PairCondition(geo, c_minus)
        total = Vec()

        def values(cls):
            if cls.d == 1:
                return self.value(cls.beta, cls.n)
            return self.sc.dt.value(cls.beta, cls.n)

        for w in words:
            if any(is_zero(values(c)) for c in w):
                continue
            coeff = coeff_U(w, tau, tau_t) / len(w)
            if coeff:
                self.terms_seen += 1
                total = total + _bracket_chain(w, values, self.sc.config, True) * coeff
        return total


def dt_wallcross_bruteforce(scenario: Scenario, beta, n: int, omega_new, margin: int = 2) -> Vec:
    """Ordered-word expansion of the DT change-of-stability sum over a widened slope box."""
    geo = scenario.geometry
    beta = tuple(beta)
    omega_new = tuple(Fraction(x) for x in omega_new)
    t1 = Fraction(n) / geo.omega_dot(beta)
    t2 = Fraction(n) / geo.omega_dot(beta, omega_new)
    ratios = [a / b for a, b in zip(omega_new, geo.omega)]
    lo = min(t1, t2 * min(ratios), t2 * max(ratios))
    hi = max(t1, t2 * min(ratios), t2 * max(ratios))
    tau = SlopeCondition(geo)
    tau_t = SlopeCondition(geo, omega_new)
    total = Vec()
    for k in range(1, split_count(beta, geo) + 1):
        for parts in ordered_decompositions(beta, k):
            ranges = [range(ceil(lo * geo.omega_dot(p)) - margin, floor(hi * geo.omega_dot(p)) + margin + 1)
                      for p in parts]
            for head in product(*ranges[:-1]):
                last = n - sum(head)
                if last not in ranges[-1]:
                    continue
                w = tuple(KClass(0, p, m) for p, m in zip(parts, head + (last,)))
                vals = [scenario.dt.value(c.beta, c.n) for c in w]
                if any(is_zero(v) for v in vals):
                    continue
                coeff = coeff_U(w, tau, tau_t) / k
                if coeff:
                    total = total + _bracket_chain(w, lambda c: scenario.dt.value(c.beta, c.n),
                                                   scenario.config, False) * coeff
    return total
