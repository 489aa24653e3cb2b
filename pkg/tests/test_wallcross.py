import json
import threading
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptrational.errors import CertificationError, ConfigError, InputError, RecursionWindowError
from ptrational.exact import Vec
from ptrational.oracle import BruteForcePT, dt_wallcross_bruteforce
from ptrational.ratgen import gf_expand, normalize, pole_locations, poles_are_admissible
from ptrational.scenario import load_text, shipped_scenario_path
from ptrational.vertexmodel import parse_basis
from ptrational.wallcross import (
    InsertionFunctional,
    WallCrossEngine,
    apply_insertion,
    dt_degree_bound,
    dt_wallcross,
    pt_recursion_step,
    pt_series,
)


def shipped_doc(name):
    return json.loads(shipped_scenario_path(name).read_text())


def build(doc):
    return load_text(json.dumps(doc))


# -- input validation -------------------------------------------------------------


def test_degree_bounds():
    assert dt_degree_bound(None) == 6
    assert dt_degree_bound(1) == 19
    assert dt_degree_bound(3) == (3 + 1) * (3 * (2 + 3) + 1) - 1


def test_dt_input_rejects_period_not_dividing_degree():
    doc = shipped_doc("fano_rank1")
    doc["classes"][0]["dt"]["period"] = 3
    doc["classes"][0]["dt"]["branches"].append([{"D": 1}])
    with pytest.raises(ConfigError):
        build(doc)


def test_dt_input_rejects_excessive_degree():
    doc = shipped_doc("geometric_series")
    doc["geometry"]["L"] = [1]
    doc["vertex"] = {"symbols": {"x": 0}}
    doc["classes"] = [{"beta": [1], "C": 0, "M": 0, "dt": {"period": 1, "branches": [[{"x": 1}] * 8]}}]
    with pytest.raises(ConfigError):
        build(doc)
    doc["vertex"]["truncation"] = 1
    build(doc)


def test_non_superpositive_classes_are_rejected():
    doc = shipped_doc("rank2_walls")
    doc["geometry"]["c1"] = [1, 0]
    with pytest.raises(ConfigError):
        build(doc)


# -- values in and around the recursion window ---------------------------------------------


def test_vanishing_middle_and_recursion_regions(split):
    eng = WallCrossEngine(split)
    assert eng.pt_value((2,), -1) == Vec()
    assert eng.pt_value((2,), 0) == Vec({parse_basis("A*pt"): 1})
    assert eng.pt_value((2,), 1) != Vec()
    assert eng.pt_value((0,), 0) == split.point_class
    assert eng.pt_value((0,), 2) == Vec()


def test_missing_middle_value_is_reported():
    doc = shipped_doc("split_rank1")
    del doc["classes"][1]["middle"]
    eng = WallCrossEngine(build(doc))
    with pytest.raises(RecursionWindowError):
        eng.pt_value((2,), 0)
    with pytest.raises(RecursionWindowError):
        eng.pt_recursion_step((2,), 0)


@pytest.mark.parametrize("name,beta,top", [("fano_rank1", (1,), 7), ("split_rank1", (1,), 7), ("split_rank1", (2,), 5)])
def test_recursion_matches_brute_force_expansion(name, beta, top):
    from ptrational.scenario import load_scenario

    sc = load_scenario(shipped_scenario_path(name))
    eng, brute = WallCrossEngine(sc), BruteForcePT(sc)
    for n in range(1, top + 1):
        assert eng.pt_value(beta, n) == brute.value(beta, n)


def test_recursion_uses_lifted_brackets_nontrivially(split):
    eng = WallCrossEngine(split)
    value = eng.pt_value((2,), 2)
    assert any(len(mono) >= 3 for (mono, _t, _s) in value)


def test_memo_is_transparent(split):
    on, off = WallCrossEngine(split, memo=True), WallCrossEngine(split, memo=False)
    for n in range(1, 8):
        assert on.pt_value((2,), n) == off.pt_value((2,), n)
    assert len(on.memo) > 0 and len(off.memo) == 0


def test_concurrent_evaluation_shares_one_memo(split):
    eng = WallCrossEngine(split)
    results = {}

    def work(n):
        results[n] = eng.pt_value((2,), n)

    threads = [threading.Thread(target=work, args=(n,)) for n in range(1, 9) for _ in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    serial = WallCrossEngine(split, memo=False)
    assert all(results[n] == serial.pt_value((2,), n) for n in range(1, 9))


@pytest.mark.parametrize("beta", [(1,), (2,)])
def test_rearranged_sum_vanishes(split, beta):
    eng = WallCrossEngine(split)
    for n in range(1, 8):
        assert eng.eq_residual(beta, n) == Vec()
    assert all(r.residual_ok for r in eng.records)


def test_records_log_enumeration_sizes(split):
    eng = WallCrossEngine(split)
    eng.pt_value((2,), 3)
    rec = [r for r in eng.records if r.beta == (2,) and r.n == 3][0]
    assert rec.multisets > 0 and rec.terms > 0
    assert rec.c_minus < Fraction(3, 2) < rec.c_plus


def test_module_level_helpers(fano):
    assert pt_recursion_step((1,), 4, fano) == WallCrossEngine(fano).pt_value((1,), 4)
    gf, cert = pt_series((1,), fano)
    assert cert["period"] == 2
    assert dt_wallcross((1,), 3, (Fraction(5, 2),), fano) == fano.dt.value((1,), 3)


# -- generating functions ---------------------------------------------------------------


@pytest.mark.parametrize("name,beta", [("fano_rank1", (1,)), ("split_rank1", (1,)), ("split_rank1", (2,))])
def test_series_extrapolates_beyond_its_samples(name, beta):
    from ptrational.scenario import load_scenario

    sc = load_scenario(shipped_scenario_path(name))
    eng = WallCrossEngine(sc)
    gf, cert = eng.pt_series(beta)
    last = cert["samples"][1]
    coeffs = gf_expand(gf, last + 30, cert["vanishing_bound"] - 3)
    for n, v in coeffs.items():
        want = Vec() if n <= cert["vanishing_bound"] else eng.pt_value(beta, n)
        assert v == want
    assert poles_are_admissible(pole_locations(gf))


def test_fano_series_denominator(fano):
    gf, cert = WallCrossEngine(fano).pt_series((1,))
    a, D, E, _num = normalize(gf)
    assert 2 % D == 0 and E <= 7
    assert cert["degrees"] == [6, 5]
    assert cert["chambers"][-1].endswith("quasi-polynomial")


def test_too_few_samples_fails_certification(fano):
    with pytest.raises(CertificationError):
        WallCrossEngine(fano).pt_series((1,), samples=12)


# -- insertions ----------------------------------------------------------------------


def test_zero_functional_gives_zero_series(fano):
    gf, _ = WallCrossEngine(fano).pt_series((1,))
    assert apply_insertion(InsertionFunctional({}), gf).is_zero()


def test_coordinate_functional_extracts_one_symbol(fano):
    eng = WallCrossEngine(fano)
    gf, _ = eng.pt_series((1,))
    key = parse_basis("D*pt*t")
    scalar = apply_insertion(InsertionFunctional({key: 1}), gf)
    for n, v in gf_expand(scalar, 20, 1).items():
        assert v == eng.pt_value((1,), n).get(key, 0)


def test_functional_commutes_with_series_assembly(fano):
    eng = WallCrossEngine(fano)
    gf, cert = eng.pt_series((1,))
    fn = InsertionFunctional({parse_basis("D*pt"): 3, parse_basis("D*pt*t"): Fraction(-1, 2)})
    after = apply_insertion(fn, gf)
    before = apply_insertion(fn, {n: eng.pt_value((1,), n) for n in range(1, 40)})
    assert all(gf_expand(after, 39, 1)[n] == before[n] for n in before)


def test_functional_degree_needs_enough_truncation():
    with pytest.raises(InputError):
        InsertionFunctional({}, degree=2).check_ring(1)
    InsertionFunctional({}, degree=2).check_ring(None)


# -- DT wall-crossing ---------------------------------------------------------------------


def test_same_kahler_vector_changes_nothing(walls):
    eng = WallCrossEngine(walls)
    for n in range(-3, 6):
        assert eng.dt_wallcross((1, 1), n, walls.geometry.omega) == eng.dt_value((1, 1), n)


def test_crossing_a_wall_adds_a_commutator_term(walls):
    eng = WallCrossEngine(walls)
    before = eng.dt_value((1, 1), 3)
    after = eng.dt_wallcross((1, 1), 3, (2, 1))
    assert before != after


@settings(max_examples=25)
@given(st.integers(-4, 6), st.sampled_from([(2, 1), (3, 1), (1, 3), (Fraction(1, 2), 1), (5, 2)]))
def test_wallcross_matches_widened_brute_force(walls, n, omega_new):
    eng = WallCrossEngine(walls)
    omega_new = tuple(Fraction(x) for x in omega_new)
    assert eng.dt_wallcross((1, 1), n, omega_new) == dt_wallcross_bruteforce(walls, (1, 1), n, omega_new, margin=3)


def test_crossing_there_and_back_returns_the_input(walls):
    # irreducible classes have no walls, so only the (1, 1) table changes
    eng = WallCrossEngine(walls)
    omega_new = (Fraction(3), Fraction(1))
    crossed = {m: eng.dt_wallcross((1, 1), m, omega_new) for m in range(-6, 10)}
    doc = shipped_doc("rank2_walls")
    doc["geometry"]["omega"] = ["3", "1"]
    moved = build(doc)
    moved.dt.tables[(1, 1)] = _FixedTable(crossed)
    back = WallCrossEngine(moved)
    for n in range(-2, 5):
        assert back.dt_wallcross((1, 1), n, walls.geometry.omega) == eng.dt_value((1, 1), n)


class _FixedTable:
    """A finite value table standing in for a quasi-polynomial."""

    period = 1

    def __init__(self, values):
        self.values = values

    def __call__(self, n):
        return self.values.get(n, Vec())


# -- reported checks -------------------------------------------------------------------


@pytest.mark.parametrize("beta", [(1,), (2,)])
def test_coefficients_do_not_depend_on_the_admissible_wall_levels(split, beta):
    eng = WallCrossEngine(split)
    for n in range(1, 5):
        assert eng.level_choice_changes(beta, n) == []


def test_kernel_survey_depends_on_the_configuration(fano, split):
    cases, misses = WallCrossEngine(fano).kernel_survey()
    assert cases == 49 and misses == []
    cases, misses = WallCrossEngine(split).kernel_survey()
    assert 0 < len(misses) < cases
