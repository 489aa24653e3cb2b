from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ptrational.classlat import (
    GeometryModel,
    KClass,
    euler_split,
    euler_sym,
    factors,
    is_effective,
    is_positive,
    is_superpositive,
    ordered_decompositions,
    split_count,
)
from ptrational.errors import InputError

betas = st.lists(st.integers(0, 3), min_size=2, max_size=2).filter(any).map(tuple)


def test_factors_of_a_rank_two_class(rank2):
    assert factors((1, 1), rank2) == ((0, 1), (1, 0), (1, 1))
    assert len(factors((2, 1), rank2)) == 3 * 2 - 1


@given(betas)
def test_factors_match_box_enumeration(beta):
    geo = GeometryModel(2, (1, 1), (1, 1), (1, 1))
    brute = {g for g in product(range(5), repeat=2)
             if any(g) and all(0 <= b - x for b, x in zip(beta, g))}
    assert set(factors(beta, geo)) == brute


def test_positivity_and_superpositivity():
    geo = GeometryModel(2, (1, 0), (1, 1), (1, 1))
    assert is_positive((1, 1), geo)
    assert not is_positive((0, 1), geo)
    assert not is_superpositive((1, 1), geo)
    assert is_superpositive((2, 0), geo)


def test_zero_and_negative_classes_are_not_effective(rank2):
    assert not is_effective((0, 0), rank2)
    assert not is_effective((1, -1), rank2)
    with pytest.raises(InputError):
        factors((0, 0), rank2)


def test_split_count_is_coordinate_sum(rank2):
    assert split_count((2, 1), rank2) == 3


@given(betas, st.integers(1, 4))
def test_ordered_decompositions_sum_back(beta, k):
    seen = set()
    for parts in ordered_decompositions(beta, k):
        assert len(parts) == k
        assert all(any(p) for p in parts)
        assert tuple(map(sum, zip(*parts))) == beta
        seen.add(parts)
    brute = {parts for parts in product([p for p in product(range(4), repeat=2) if any(p)], repeat=k)
             if tuple(map(sum, zip(*parts))) == beta}
    assert seen == brute


def test_decompositions_with_an_optional_zero_slot():
    parts = list(ordered_decompositions((1,), 2, allow_zero_at=0))
    assert ((0,), (1,)) in parts and ((1,), (0,)) not in parts


@given(betas, betas, st.integers(0, 1), st.integers(0, 1), st.integers(-3, 3), st.integers(-3, 3))
def test_split_euler_form_symmetrizes_to_pairing(b1, b2, d1, d2, n1, n2):
    geo = GeometryModel(2, (1, 2), (1, 1), (1, 1))
    a, b = KClass(d1, b1, n1), KClass(d2, b2, n2)
    assert euler_split(a, b, geo) + euler_split(b, a, geo) == euler_sym(a, b, geo)


def test_geometry_validates_lengths_and_signs():
    with pytest.raises(InputError):
        GeometryModel(2, (1,), (1, 1), (1, 1))
    with pytest.raises(InputError):
        GeometryModel(1, (1,), (Fraction(-1),), (1,))
