"""Universal wall-crossing coefficients S, U and their bracket rewriting.

``coeff_U`` gives the coefficient of an ordered product of invariants when
passing from stability ``tau`` to ``tau_t``.  Summed over the orderings of a
fixed multiset of classes these products form a primitive element of the
free associative algebra, so (by the Dynkin-Specht-Wever theorem) dividing
each word coefficient by the word length rewrites the sum as left-nested
brackets.  ``coeff_Utilde`` performs and certifies that rewriting.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Callable, Iterator, Sequence

from .classlat import class_sum
from .errors import InputError, NotLieError
from .exact import Vec


class TensorWordSum(Vec):
    """Linear combination of words (tuples of letters) in the free algebra."""


class LieWordSum(Vec):
    """Linear combination of words read as left-nested brackets."""


def compositions(n: int) -> Iterator[tuple[int, ...]]:
    """Cut sequences 0 = a_0 < a_1 < ... < a_m = n, for every m >= 1."""
    for mask in range(1 << (n - 1)):
        cuts = [0] + [i + 1 for i in range(n - 1) if mask >> i & 1] + [n]
        yield tuple(cuts)


def _slope(tau: Callable, cls):
    try:
        return tau(cls)
    except InputError as exc:
        raise InputError(f"slope undefined on {cls}: {exc}") from exc


def coeff_S(seq: Sequence, tau: Callable, tau_t: Callable, _cache: dict | None = None) -> int:
    """(-1)^r when each adjacent position satisfies case (a) or (b), else 0.

    Case (a): tau rises (non-strictly) while tau_t of the prefix exceeds the suffix.
    Case (b): tau falls strictly while tau_t of the prefix does not exceed the suffix.
    r counts the positions in case (a).
    """
    seq = tuple(seq)
    if _cache is not None and seq in _cache:
        return _cache[seq]
    n = len(seq)
    if n == 0:
        raise InputError("empty class sequence")
    taus = [_slope(tau, a) for a in seq]
    prefix = [seq[0]]
    for a in seq[1:]:
        prefix.append(prefix[-1] + a)
    suffix = [seq[-1]]
    for a in reversed(seq[:-1]):
        suffix.append(a + suffix[-1])
    suffix.reverse()
    r = 0
    result = 1
    for i in range(n - 1):
        left = _slope(tau_t, prefix[i])
        right = _slope(tau_t, suffix[i + 1])
        if taus[i] <= taus[i + 1] and left > right:
            r += 1
        elif taus[i] > taus[i + 1] and left <= right:
            pass
        else:
            result = 0
            break
    if result:
        result = -1 if r % 2 else 1
    if _cache is not None:
        _cache[seq] = result
    return result


def coeff_U(seq: Sequence, tau: Callable, tau_t: Callable) -> Fraction:
    """The coefficient U(alpha_1, ..., alpha_n; tau, tau_t)."""
    seq = tuple(seq)
    n = len(seq)
    if n == 0:
        raise InputError("empty class sequence")
    total_t = _slope(tau_t, class_sum(seq))
    alpha_tau = [_slope(tau, a) for a in seq]
    s_cache: dict = {}
    result = Fraction(0)
    for a in compositions(n):
        blocks = []
        weight = Fraction(1)
        ok = True
        for lo, hi in zip(a, a[1:]):
            block = class_sum(seq[lo:hi])
            if hi - lo > 1:
                tb = _slope(tau, block)
                if any(alpha_tau[j] != tb for j in range(lo, hi)):
                    ok = False
                    break
            blocks.append(block)
            weight /= factorial(hi - lo)
        if not ok:
            continue
        m = len(blocks)
        for b in compositions(m):
            gammas = [class_sum(blocks[lo:hi]) for lo, hi in zip(b, b[1:])]
            if len(gammas) > 1 and any(_slope(tau_t, g) != total_t for g in gammas):
                continue
            prod = 1
            for lo, hi in zip(b, b[1:]):
                prod *= coeff_S(blocks[lo:hi], tau, tau_t, s_cache)
                if not prod:
                    break
            if prod:
                l = len(gammas)
                result += Fraction((-1) ** (l - 1), l) * prod * weight
    return result


def coeff_Utilde_word(seq: Sequence, tau: Callable, tau_t: Callable) -> Fraction:
    """Bracket coefficient of one ordering under the Dynkin normalization."""
    return coeff_U(seq, tau, tau_t) / len(seq)


def distinct_orderings(items: Sequence) -> Iterator[tuple]:
    """Each distinct ordering of a multiset once, in lexicographic order."""
    pool = sorted(items)
    n = len(pool)

    def rec(prefix: list, used: list):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        last = None
        for i in range(n):
            if used[i] or (last is not None and pool[i] == last):
                continue
            last = pool[i]
            used[i] = True
            prefix.append(pool[i])
            yield from rec(prefix, used)
            prefix.pop()
            used[i] = False

    yield from rec([], [False] * n)


def word_sum(classes: Sequence, tau: Callable, tau_t: Callable) -> TensorWordSum:
    """P = sum over orderings w of U(w) * w, for the multiset ``classes``."""
    return TensorWordSum({w: coeff_U(w, tau, tau_t) for w in distinct_orderings(classes)})


def _left_bracket(word: tuple) -> dict:
    terms = {word[:1]: 1}
    for letter in word[1:]:
        nxt: dict = {}
        for w, c in terms.items():
            nxt[w + (letter,)] = nxt.get(w + (letter,), 0) + c
            nxt[(letter,) + w] = nxt.get((letter,) + w, 0) - c
        terms = nxt
    return terms


def lie_expand(lws: Vec) -> TensorWordSum:
    """Expand left-nested brackets with [f, g] = f g - g f."""
    acc: dict = {}
    for word, coeff in lws.items():
        for w, c in _left_bracket(tuple(word)).items():
            acc[w] = acc.get(w, 0) + coeff * c
    return TensorWordSum(acc)


def dynkin_rho(tws: Vec) -> TensorWordSum:
    """The left-bracketing map rho(x_1 ... x_n) = [...[x_1, x_2], ..., x_n], expanded."""
    return lie_expand(tws)


def graded_pieces(tws: Vec) -> dict[int, TensorWordSum]:
    pieces: dict[int, dict] = {}
    for w, c in tws.items():
        pieces.setdefault(len(w), {})[w] = c
    return {n: TensorWordSum(p) for n, p in sorted(pieces.items())}


def primitivity_defect(tws: Vec) -> TensorWordSum:
    """rho(P) - n P summed over word-length pieces; zero iff P is primitive."""
    defect = TensorWordSum()
    for n, piece in graded_pieces(tws).items():
        defect = defect + (dynkin_rho(piece) - piece * n)
    return defect


def coeff_Utilde(classes: Sequence, tau: Callable, tau_t: Callable) -> LieWordSum:
    """Rewrite the U-word sum of a multiset as left-nested brackets.

    Raises :class:`NotLieError` if the word sum fails the primitivity test.
    """
    p = word_sum(classes, tau, tau_t)
    defect = primitivity_defect(p)
    if defect:
        witness = min(defect.items())
        raise NotLieError("word sum is not primitive, so it is not Lie-rewritable", witness)
    return LieWordSum({w: c / len(w) for w, c in p.items()})
