"""Independent brute-force references used by the test-suite.

Nothing here calls the routine it is meant to check: lattice sums walk a box
point by point, generating functions are expanded by long division, and
sequences are propagated step by step from their recurrences.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import product
from math import comb

from ptrational.classlat import class_sum
from ptrational.wallcoeffs import coeff_U, compositions


# -- lattice sums --------------------------------------------------------------


def box_fiber_sum(func, k: int, n: int, radius: int):
    """Sum of func(x) over x in [-radius, radius]^(k-1) x Z with sum(x) = n.

    ``func`` returns 0 outside its support; the caller picks ``radius`` large
    enough to contain every point of the fibre.
    """
    total = 0
    for head in product(range(-radius, radius + 1), repeat=k - 1):
        x = head + (n - sum(head),)
        total += func(x)
    return total


def chamber_indicator(inequalities):
    """Callable testing ``a . x rel b`` for a list of (a, rel, b)."""
    ops = {"<": lambda u, v: u < v, "<=": lambda u, v: u <= v, "=": lambda u, v: u == v,
           ">=": lambda u, v: u >= v, ">": lambda u, v: u > v}

    def inside(x):
        return all(ops[rel](sum(Fraction(c) * xi for c, xi in zip(a, x)), Fraction(b)) for a, rel, b in inequalities)

    return inside


# -- sequences and generating functions ---------------------------------------------


def eventually_qp_value(M: int, exceptional: dict, tail_from: int, branch_polys, period: int, n: int):
    """Direct evaluation of the piecewise-defined sequence."""
    if n <= M:
        return 0
    if n < tail_from:
        return exceptional.get(n, 0)
    coeffs = branch_polys[n % period]
    return sum(Fraction(c) * n ** i for i, c in enumerate(coeffs))


def series_by_division(num: dict, a: int, D: int, E: int, n_max: int) -> dict:
    """Coefficients of num(q) / (q^a (1 - q^D)^E) by repeated multiplication with 1/(1 - q^D)."""
    series = dict(num)
    top = n_max + a
    for _ in range(E):
        out: dict = {}
        for p in range(0, top + 1):
            acc = series.get(p, 0)
            if p - D >= 0:
                acc = acc + out.get(p - D, 0)
            out[p] = acc
        series = out
    return {p - a: series.get(p, 0) for p in range(0, top + 1)}


def annihilated_sequence(m: int, d: int, start: int, seeds: dict, length: int) -> dict:
    """Values f(start..start+length-1) satisfying sum_i (-1)^i C(m, i) f(n + i d) = 0.

    ``seeds`` gives f on the first m*d integers from ``start``.
    """
    f = dict(seeds)
    for n in range(start + m * d, start + length):
        # the window n - m d, ..., n; solve its i = m term for f(n)
        acc = sum((-1) ** i * comb(m, i) * f[n - (m - i) * d] for i in range(m))
        f[n] = -acc * (-1) ** m
    return {n: f[n] for n in range(start, start + length)}


# -- shift models over a truncated ring ----------------------------------------------


def truncated_shift_model(N: int, rnd: random.Random, block: int = 2):
    """A unipotent J on the module (Q^b)^(3(2+j)+1) tensor s^j, j = 0..N.

    J is block upper triangular for the s-grading (multiplication by s only
    raises the grade).  The grade-j diagonal block is identity plus a single
    nilpotent Jordan chain of length 3(2+j)+1 repeated ``block`` times, so
    (id - J) restricted to grade j has order at most 3(2+j)+1.
    Returns (J, total dimension).
    """
    sizes = [3 * (2 + j) + 1 for j in range(N + 1)]
    offsets = []
    dim = 0
    for size in sizes:
        offsets.append(dim)
        dim += size * block
    J = [[Fraction(0)] * dim for _ in range(dim)]
    for i in range(dim):
        J[i][i] = Fraction(1)
    for j, size in enumerate(sizes):
        base = offsets[j]
        for b in range(block):
            for t in range(size - 1):
                r = base + b * size + t
                J[r][r + 1] = Fraction(rnd.randint(1, 3))
    # arbitrary couplings from grade j into higher grades
    for j in range(N + 1):
        for jj in range(j + 1, N + 1):
            for r in range(offsets[jj], offsets[jj] + sizes[jj] * block):
                for c in range(offsets[j], offsets[j] + sizes[j] * block):
                    if rnd.random() < 0.2:
                        J[r][c] = Fraction(rnd.randint(-2, 2), rnd.randint(1, 3))
    return J, dim


def mat_vec(J, v):
    return [sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in J]


# -- wall-crossing coefficients -----------------------------------------------------


def composed_U(word, tau, tau_mid, tau_new) -> Fraction:
    """U(word; tau, tau_new) rebuilt from two successive changes through tau_mid."""
    total = Fraction(0)
    for cuts in compositions(len(word)):
        blocks = [word[lo:hi] for lo, hi in zip(cuts, cuts[1:])]
        outer = coeff_U(tuple(class_sum(b) for b in blocks), tau_mid, tau_new)
        if not outer:
            continue
        for b in blocks:
            outer *= coeff_U(b, tau, tau_mid)
            if not outer:
                break
        total += outer
    return total


def free_algebra_commutator_expand(word) -> dict:
    """Left-nested commutator [...[w1, w2], ..., wk] as a word -> coefficient dict."""
    terms = {(word[0],): 1}
    for letter in word[1:]:
        nxt: dict = {}
        for w, c in terms.items():
            nxt[w + (letter,)] = nxt.get(w + (letter,), 0) + c
            nxt[(letter,) + w] = nxt.get((letter,) + w, 0) - c
        terms = {w: c for w, c in nxt.items() if c}
    return terms
