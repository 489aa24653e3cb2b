"""Coefficient rings: the rationals, or Q[s]/(s^(N+1)) for a truncation level N."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .errors import InputError

RingElt = dict  # {power of s: Fraction}, zero entries dropped


@dataclass(frozen=True)
class CoeffRing:
    truncation: int | None = None

    def __post_init__(self):
        if self.truncation is not None and (not isinstance(self.truncation, int) or self.truncation < 0):
            raise InputError("truncation level must be a nonnegative integer", "truncation")

    @property
    def top(self) -> int:
        """Largest surviving power of s."""
        return 0 if self.truncation is None else self.truncation

    @property
    def rank(self) -> int:
        return self.top + 1

    def admits(self, spow: int) -> bool:
        return 0 <= spow <= self.top

    def element(self, data) -> RingElt:
        out = {}
        for p, c in dict(data).items():
            c = Fraction(c)
            if not c:
                continue
            if not self.admits(p):
                raise InputError(f"power s^{p} not available in {self}")
            out[p] = c
        return out

    def mul(self, a: RingElt, b: RingElt) -> RingElt:
        out: dict = {}
        for i, x in a.items():
            for j, y in b.items():
                if i + j <= self.top:
                    out[i + j] = out.get(i + j, 0) + x * y
        return {p: c for p, c in out.items() if c}

    def power(self, a: RingElt, k: int) -> RingElt:
        out: RingElt = {0: Fraction(1)}
        for _ in range(k):
            out = self.mul(out, a)
        return out

    def one_plus_s_power(self, a: int) -> RingElt:
        return {p: Fraction(comb(a, p)) for p in range(min(a, self.top) + 1) if comb(a, p)}

    def mult_matrix(self, a: RingElt) -> list[list[Fraction]]:
        """Matrix of multiplication by ``a`` on the basis 1, s, ..., s^N (columns = images)."""
        n = self.rank
        mat = [[Fraction(0)] * n for _ in range(n)]
        for col in range(n):
            for p, c in a.items():
                if col + p < n:
                    mat[col + p][col] += c
        return mat

    def __str__(self):
        return "Q" if self.truncation is None else f"Q[s]/(s^{self.truncation + 1})"
