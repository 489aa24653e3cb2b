from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st
from oracles import eventually_qp_value, series_by_division

from ptrational.errors import InputError
from ptrational.exact import Vec
from ptrational.quasipoly import QuasiPoly
from ptrational.ratgen import (
    GFTerm,
    RationalGF,
    RootOfUnity,
    cyclotomic,
    gf_expand,
    normalize,
    normalized_text,
    pole_locations,
    poles_are_admissible,
    poles_text,
    qp_tail_to_gf,
)

small = st.fractions(min_value=-6, max_value=6, max_denominator=5)


@st.composite
def eventual_sequences(draw):
    period = draw(st.integers(1, 4))
    branches = [draw(st.lists(small, max_size=4)) for _ in range(period)]
    M = draw(st.integers(-6, 4))
    N = draw(st.integers(M + 1, M + 6))
    exceptional = {n: draw(small) for n in range(M + 1, N) if draw(st.booleans())}
    return M, exceptional, N, branches, period


def test_geometric_series():
    gf = qp_tail_to_gf(-1, {}, QuasiPoly.from_branches(1, [[1]]), 0)
    assert list(gf_expand(gf, 10).values()) == [1] * 11
    assert normalized_text(gf) == "[(1)*q^0] / [(1 - q^1)^1]"
    assert pole_locations(gf) == {(RootOfUnity(1, 0), 1)}


@given(eventual_sequences())
def test_expansion_inverts_construction(data):
    M, exceptional, N, branches, period = data
    gf = qp_tail_to_gf(M, exceptional, QuasiPoly.from_branches(period, branches), N)
    coeffs = gf_expand(gf, 80, M - 3)
    for n, v in coeffs.items():
        assert v == eventually_qp_value(M, exceptional, N, branches, period, n)


@given(eventual_sequences())
def test_normal_form_expands_by_long_division(data):
    M, exceptional, N, branches, period = data
    gf = qp_tail_to_gf(M, exceptional, QuasiPoly.from_branches(period, branches), N)
    a, D, E, num = normalize(gf)
    assert a >= 0 and all(p >= 0 for p in num)
    direct = series_by_division(num, a, D, E, 60)
    for n in range(-a, 61):
        assert direct.get(n, 0) == eventually_qp_value(M, exceptional, N, branches, period, n)


@given(eventual_sequences())
def test_poles_are_admissible_and_bounded_by_degree(data):
    M, exceptional, N, branches, period = data
    qp = QuasiPoly.from_branches(period, branches)
    gf = qp_tail_to_gf(M, exceptional, qp, N)
    poles = pole_locations(gf)
    assert poles_are_admissible(poles)
    top = max(qp.branch_degrees(), default=-1) + 1
    for loc, order in poles:
        if loc != "0":
            assert order <= top
            assert qp.period % loc.order == 0


def test_vector_valued_tail():
    tail = QuasiPoly.from_branches(2, [[Vec({"x": 1})], [Vec({"y": 2}), Vec({"x": 1})]])
    gf = qp_tail_to_gf(0, {1: Vec({"y": 5})}, tail, 2)
    out = gf_expand(gf, 6)
    assert out[1] == Vec({"y": 5})
    assert out[5] == Vec({"y": 2, "x": 5})


def test_alternating_sequence_has_a_single_pole_at_minus_one():
    gf = qp_tail_to_gf(-1, {}, QuasiPoly.from_branches(2, [[1], [-1]]), 0)
    assert pole_locations(gf) == {(RootOfUnity(2, 1), 1)}
    assert poles_text(pole_locations(gf)) == "q=-1 (order 1)"


def test_laurent_prefix_gives_a_pole_at_zero():
    gf = RationalGF({-2: Fraction(3)})
    assert pole_locations(gf) == {("0", 2)}


def test_period_three_puts_poles_at_primitive_cube_roots():
    gf = qp_tail_to_gf(-1, {}, QuasiPoly.from_branches(3, [[1], [0], [0]]), 0)
    assert pole_locations(gf) == {(RootOfUnity(3, 1), 1), (RootOfUnity(3, 2), 1), (RootOfUnity(1, 0), 1)}


@pytest.mark.parametrize("k,coeffs", [(1, (-1, 1)), (2, (1, 1)), (3, (1, 1, 1)), (4, (1, 0, 1)), (6, (1, -1, 1))])
def test_cyclotomic_polynomials(k, coeffs):
    assert cyclotomic(k) == coeffs


def test_cancelled_denominator_collapses():
    # (1 - q) / (1 - q) = 1
    gf = RationalGF({}, [GFTerm(0, ((0, 1), (1, -1)), 1, 1)])
    assert normalize(gf) == (0, 1, 0, {0: 1})
    assert pole_locations(gf) == set()


def test_construction_rejects_out_of_window_exceptions():
    tail = QuasiPoly.from_branches(1, [[1]])
    with pytest.raises(InputError):
        qp_tail_to_gf(0, {5: 1}, tail, 3)
    with pytest.raises(InputError):
        qp_tail_to_gf(3, {}, tail, 3)


def test_canonical_text_is_independent_of_term_split():
    tail = QuasiPoly.from_branches(1, [[0, 1]])
    a = qp_tail_to_gf(-1, {}, tail, 0)
    b = qp_tail_to_gf(-1, {0: 0, 1: 1, 2: 2}, tail, 3)
    assert normalized_text(a) == normalized_text(b)
