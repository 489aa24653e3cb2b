import random
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import (
    annihilated_sequence,
    box_fiber_sum,
    chamber_indicator,
    mat_vec,
    truncated_shift_model,
)

from ptrational.coeffring import CoeffRing
from ptrational.errors import (
    CertificationError,
    InputError,
    NotQuasiPolynomialError,
    NotUnipotentError,
    PreconditionError,
)
from ptrational.exact import Vec, mpoly_eval
from ptrational.quasipoly import (
    Chamber,
    Constraint,
    PiecewiseQP,
    QuasiPoly,
    affine_pullback,
    certify_pqp,
    convolve_fiberwise,
    ehrhart_sum,
    nilpotency_order,
    parse_constraint,
    pqp_add,
    qp_add,
    shift_to_qp,
    solve_difference,
)

small = st.fractions(min_value=-5, max_value=5, max_denominator=4)
rels = st.sampled_from(["<", "<=", "=", ">=", ">"])


def chamber(ineqs, k):
    return Chamber([Constraint(a, rel, b) for a, rel, b in ineqs], k)


# -- quasi-polynomials -----------------------------------------------------------


def test_period_is_reduced_to_the_minimum():
    q = QuasiPoly.from_branches(4, [[1, 2], [0, 1], [1, 2], [0, 1]])
    assert q.period == 2
    assert [q(n) for n in range(-2, 3)] == [-3, -1, 1, 1, 5]


def test_branches_must_match_period():
    with pytest.raises(InputError):
        QuasiPoly.from_branches(2, [[1]])


def test_scalar_and_vector_values_do_not_mix():
    with pytest.raises(InputError):
        qp_add(QuasiPoly.from_branches(1, [[1]]), QuasiPoly.from_branches(1, [[Vec({"x": 1})]]))


@given(st.lists(st.lists(small, max_size=3), min_size=1, max_size=3),
       st.lists(st.lists(small, max_size=3), min_size=1, max_size=3), st.integers(-30, 30))
def test_sum_of_quasi_polynomials_is_pointwise(a, b, n):
    f, g = QuasiPoly.from_branches(len(a), a), QuasiPoly.from_branches(len(b), b)
    assert qp_add(f, g)(n) == f(n) + g(n)


# -- constraints and chambers ---------------------------------------------------------


@given(st.lists(small, min_size=2, max_size=2), rels, small)
def test_integer_form_agrees_on_every_lattice_point(coeffs, rel, bound):
    c = Constraint(tuple(coeffs), rel, bound)
    form = c.integer_form()
    for x in product(range(-6, 7), repeat=2):
        if form is True or form is False:
            expect = form
        else:
            kind, a, b = form
            lhs = sum(ai * xi for ai, xi in zip(a, x))
            expect = lhs <= b if kind == "le" else lhs == b
        assert c.holds(x) == expect


@given(st.lists(st.tuples(st.lists(st.integers(-3, 3), min_size=2, max_size=2), rels, st.integers(-4, 4)),
                min_size=1, max_size=3))
def test_complement_partitions_the_lattice(ineqs):
    ch = chamber(ineqs, 2)
    pieces = [ch] + ch.complement()
    for x in product(range(-5, 6), repeat=2):
        assert sum(p.contains(x) for p in pieces) == 1


@settings(max_examples=25)
@given(st.lists(st.tuples(st.lists(st.integers(-3, 3), min_size=2, max_size=2), rels, st.integers(-6, 6)),
                min_size=1, max_size=4))
def test_emptiness_matches_a_box_search_when_bounded(ineqs):
    box = [((1, 0), "<=", 8), ((1, 0), ">=", -8), ((0, 1), "<=", 8), ((0, 1), ">=", -8)]
    ch = chamber(ineqs + box, 2)
    inside = chamber_indicator(ineqs + box)
    brute_empty = not any(inside(x) for x in product(range(-8, 9), repeat=2))
    assert ch.is_empty() == brute_empty


def test_unbounded_slices_are_detected():
    assert not chamber([((1, 0), ">=", 0)], 2).slices_bounded()
    assert chamber([((1, 0), ">=", 0), ((0, 1), ">=", 0)], 2).slices_bounded()
    with pytest.raises(PreconditionError):
        ehrhart_sum(chamber([((1, 0), ">=", 0)], 2), {(0, 0): 1}, 3)


def test_constraint_parser_reports_path():
    with pytest.raises(InputError) as err:
        parse_constraint([[1, 2], "<>", 0], 2, "chambers[0]")
    assert "chambers[0]" in str(err.value)


# -- lattice sums -----------------------------------------------------------------------

FIXTURES = {
    "triangle": ([((1, 0), ">=", 0), ((0, 1), ">=", 0), ((1, 2), "<=", 10)], {(1, 1): 1, (0, 0): 1}),
    "shifted_cone": ([((1, 0), ">=", 3), ((0, 1), ">=", -2), ((1, -2), "<=", 5)], {(0, 1): 2}),
    "half_open": ([((1, 0), ">=", 0), ((1, -1), "<", 0)], {(0, 0): 1}),
    "closed_wedge": ([((1, 0), ">=", 0), ((1, -1), "<=", 0)], {(1, 0): 1}),
}


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_ehrhart_sum_matches_box_sum(name):
    ineqs, w = FIXTURES[name]
    inside = chamber_indicator(ineqs)
    ch = chamber(ineqs, 2)
    for n in range(-15, 30):
        brute = box_fiber_sum(lambda x: mpoly_eval(w, x) if inside(x) else 0, 2, n, 45)
        assert ehrhart_sum(ch, w, n) == brute


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_certified_pieces_reproduce_lattice_sums(name):
    ineqs, w = FIXTURES[name]
    inside = chamber_indicator(ineqs)
    F = certify_pqp(chamber(ineqs, 2), w, (-60, 60))
    assert F.check_partition(range(-80, 81))
    for n in range(-80, 81):
        assert F(n) == box_fiber_sum(lambda x: mpoly_eval(w, x) if inside(x) else 0, 2, n, 100)


def test_wedge_count_has_period_two():
    F = certify_pqp(chamber([((1, 0), ">=", 0), ((1, -1), "<=", 0)], 2), {(0, 0): 1})
    tail = [q for c, q in F.pieces if c.contains((50,))][0]
    assert tail.period == 2
    assert all(F(n) == n // 2 + 1 for n in range(0, 40))


def test_three_dimensional_simplex():
    ineqs = [((1, 0, 0), ">=", 0), ((0, 1, 0), ">=", 0), ((0, 0, 1), ">=", 0)]
    F = certify_pqp(chamber(ineqs, 3), {(0, 0, 0): 1}, (-20, 20))
    for n in range(-10, 25):
        assert F(n) == (n + 1) * (n + 2) // 2 if n >= 0 else F(n) == 0


def test_certification_records_its_choices():
    F = certify_pqp(chamber(FIXTURES["half_open"][0], 2), {(0, 0): 1}, (-30, 30))
    cert = F.certificate
    assert cert["period_bound"] == 2 and cert["degree_bound"] == 1
    assert any(p["kind"] == "quasi-polynomial" for p in cert["pieces"])


def test_too_small_period_bound_fails_certification():
    with pytest.raises(CertificationError):
        certify_pqp(chamber(FIXTURES["half_open"][0], 2), {(0, 0): 1}, (-30, 30), period_bound=1)


# -- piecewise algebra ------------------------------------------------------------------


def _interval_pqp(lo, hi, branches):
    return PiecewiseQP.from_support(Chamber.interval(lo, hi), QuasiPoly.from_branches(len(branches), branches))


@given(st.integers(-10, 5), st.integers(0, 10), st.integers(-5, 10),
       st.lists(st.lists(small, max_size=2), min_size=1, max_size=2),
       st.lists(st.lists(small, max_size=2), min_size=1, max_size=2))
def test_piecewise_sum_is_pointwise(lo, width, lo2, b1, b2):
    f = _interval_pqp(lo, lo + width, b1)
    g = _interval_pqp(lo2, None, b2)
    h = pqp_add(f, g)
    for n in range(-25, 25):
        assert h(n) == f(n) + g(n)


@given(st.integers(-4, 4), st.integers(1, 3), st.lists(st.lists(small, max_size=3), min_size=1, max_size=2))
def test_affine_pullback_pointwise(shift, step, branches):
    g = _interval_pqp(-3, None, branches)
    h = affine_pullback(g, shift, step)
    for n in range(-30, 30):
        expect = g((n - shift) // step) if (n - shift) % step == 0 else 0
        assert h(n) == expect


def _weighted(ineqs, qp):
    return PiecewiseQP.from_support(chamber(ineqs, 2), qp)


CONVOLUTIONS = {
    "quadrant": ([((1, 0), ">=", 0), ((0, 1), ">=", 0)], QuasiPoly.polynomial({(0, 0): 1}, 2)),
    "ordered": ([((1, 0), ">=", 1), ((0, 1), ">=", 0), ((1, -1), "<=", 0)], QuasiPoly.polynomial({(1, 1): 1}, 2)),
    "parity_weight": ([((1, 0), ">=", 0), ((0, 1), ">=", 0)],
                      QuasiPoly(2, {(0, 0): {(0, 1): 1}, (0, 1): {(0, 1): 1},
                                    (1, 0): {(0, 0): 1}, (1, 1): {(0, 0): 1}}, 2)),
}


@pytest.mark.parametrize("name", sorted(CONVOLUTIONS))
def test_fiberwise_convolution_matches_direct_sum(name):
    ineqs, qp = CONVOLUTIONS[name]
    F = _weighted(ineqs, qp)
    H = convolve_fiberwise(F, (-40, 40))
    for n in range(-40, 41):
        assert H(n) == box_fiber_sum(F, 2, n, 50)


def test_convolution_needs_bounded_fibres():
    F = _weighted([((1, 0), ">=", 0)], QuasiPoly.polynomial({(0, 0): 1}, 2))
    with pytest.raises(PreconditionError):
        convolve_fiberwise(F)


# -- difference equations and shifts -----------------------------------------------------


@given(st.integers(1, 7), st.integers(1, 3), st.integers(-10, 10), st.randoms(use_true_random=False))
def test_annihilated_sequences_are_quasi_polynomial(m, d, start, rnd):
    seeds = {start + i: Fraction(rnd.randint(-9, 9), rnd.randint(1, 4)) for i in range(m * d)}
    seq = annihilated_sequence(m, d, start, seeds, m * d + 6 * d)
    qp = solve_difference(m, d, seq)
    assert max(qp.branch_degrees()) <= m - 1
    assert all(qp(n) == v for n, v in seq.items())


def test_non_annihilated_data_is_rejected():
    seq = {n: Fraction(2) ** n for n in range(0, 20)}
    with pytest.raises(NotQuasiPolynomialError):
        solve_difference(3, 1, seq)


def test_too_few_samples_is_an_input_error():
    with pytest.raises(InputError):
        solve_difference(4, 1, {0: 1, 1: 2})


@pytest.mark.parametrize("N", [0, 1, 2, 3])
def test_multiplication_by_power_of_one_plus_s_is_unipotent(N):
    ring = CoeffRing(N)
    for a in range(-3, 4):
        if a < 0:
            continue
        J = ring.mult_matrix(ring.one_plus_s_power(a))
        assert nilpotency_order(J) <= N + 1


@pytest.mark.parametrize("N", [0, 1, 2, 3])
def test_truncated_shift_models_respect_order_bound(N):
    rnd = random.Random(N)
    J, dim = truncated_shift_model(N, rnd, block=1)
    order = nilpotency_order(J, cap=dim + 1)
    assert order <= (N + 1) * (3 * (2 + N) + 1)


def test_non_unipotent_shift_is_rejected():
    with pytest.raises(NotUnipotentError):
        nilpotency_order([[2, 0], [0, 1]])


@settings(max_examples=12)
@given(st.integers(1, 3), st.randoms(use_true_random=False))
def test_shift_solution_propagates_and_solves_difference_equation(d, rnd):
    J, dim = truncated_shift_model(1, rnd, block=1)
    f0 = [[Fraction(rnd.randint(-3, 3)) for _ in range(dim)] for _ in range(d)]
    qp = shift_to_qp(J, d, f0, n0=0, rng=(-6 * d, 30 * d))
    m = nilpotency_order(J, cap=dim + 1)
    assert max(qp.branch_degrees()) <= m - 1
    # independent step-by-step propagation
    for i in range(d):
        v = f0[i]
        for step in range(25):
            assert qp(i + step * d) == Vec({j: x for j, x in enumerate(v)})
            v = mat_vec(J, v)
    samples = {n: qp(n) for n in range(0, (m + 3) * d)}
    assert solve_difference(m, d, samples) == qp
