import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from growthlab.cayley import standard_generators
from growthlab.elementset import ElementSet, closure
from growthlab.families import FamilySpec, build
from growthlab.field import FieldParams, all_matrices, make_rng, random_matrices
from growthlab.growth import (
    ball,
    borel_subgroup,
    coset_labels,
    growth_exponent,
    is_closed,
    subgroup_inequality_checks,
    triple_stats,
)
from growthlab.structure import random_generating_set

# symmetric ball sizes of the standard generators of SL2(F5), from the
# pure-Python BFS oracle with generators {I, g, h, g^-1, h^-1}
SL2_F5_BALL = [1, 5, 17, 43, 91, 117, 120]
SL2_F5_SATURATION_RADIUS = 6


def test_ball_of_identity():
    P = FieldParams(p=5, n=2)
    prof = ball(ElementSet.identity(P), 5)
    assert prof.sizes == [1] * 6
    assert prof.saturated


def test_ball_one_contains_symmetric_set():
    P = FieldParams(p=7, n=2)
    A = ElementSet(P, random_matrices(P, 5, make_rng(0)))
    assert A.symmetric(with_identity=True).issubset(ball(A, 1).ball)


def test_ball_saturation_sl2_f5():
    P = FieldParams(p=5, n=2)
    prof = ball(standard_generators(P), 8)
    assert prof.sizes[: len(SL2_F5_BALL)] == SL2_F5_BALL
    assert prof.sizes.index(120) == SL2_F5_SATURATION_RADIUS
    assert prof.strictly_growing_until_saturation()


def test_ball_oracle_agrees():
    gens = [((1, 1), (0, 1)), ((1, 0), (1, 1)), ((1, 4), (0, 1)), ((1, 0), (4, 1)), ((1, 0), (0, 1))]
    layers = oracles.bfs_directed(gens, 5)
    assert np.cumsum(layers).tolist() == SL2_F5_BALL


def test_subgroup_has_zero_growth():
    P = FieldParams(p=7, n=2)
    H = closure(ElementSet(P, np.array([[[1, 1], [0, 1]]])))
    rep = triple_stats(H)
    assert rep.size_aaa == len(H)
    assert rep.delta == 0.0


def test_torus_powers_growth():
    A = build(FamilySpec("torus_powers", 13, 5, x=2))
    rep = triple_stats(A)
    assert (rep.size_a, rep.size_aaa) == (5, 12)
    assert oracles.diagonal_triple(range(1, 6), 12) == 12


def test_random_generating_set_grows():
    P = FieldParams(p=5, n=3)
    A = random_generating_set(P, 20, make_rng(11))
    rep = triple_stats(A)
    assert rep.size_aaa > rep.size_a


def test_growth_exponent():
    assert growth_exponent(10, 10) == 0.0
    assert growth_exponent(10, 100) == pytest.approx(1.0)


def test_borel_and_closure():
    P = FieldParams(p=11, n=2)
    H = borel_subgroup(P)
    assert len(H) == 11 * 10
    assert is_closed(H)
    assert not is_closed(ElementSet(P, np.array([[[1, 1], [0, 1]]])))


def test_coset_label_modes_agree():
    P = FieldParams(p=7, n=2)
    H = borel_subgroup(P)
    A = ElementSet(P, random_matrices(P, 40, make_rng(3)))
    a = coset_labels(A, H, "min")
    b = coset_labels(A, H, "borel")
    # same partition of A
    pairs = set(zip(a.tolist(), b.tolist()))
    assert len(pairs) == len(set(a.tolist())) == len(set(b.tolist()))


def test_subgroup_checks_whole_group():
    P = FieldParams(p=5, n=2)
    G = ElementSet(P, all_matrices(P), _canonical=True)
    A = ElementSet(P, random_matrices(P, 10, make_rng(1)))
    res = subgroup_inequality_checks(A, G, trusted=True)
    assert res.r == 1
    assert res.passed


def test_subgroup_checks_a_inside_h():
    P = FieldParams(p=7, n=2)
    H = borel_subgroup(P)
    A = H.filter(np.arange(len(H)) % 5 == 0)
    res = subgroup_inequality_checks(A, H)
    assert res.r == 1
    rec = {r.name: r for r in res.records}
    assert rec["coset_pigeonhole"].lhs >= len(A)
    assert res.passed


@given(st.integers(0, 2**32 - 1), st.integers(2, 25))
@settings(max_examples=25, deadline=None)
def test_subgroup_checks_random_borel(seed, size):
    P = FieldParams(p=11, n=2)
    H = borel_subgroup(P)
    A = ElementSet(P, random_matrices(P, size, make_rng(seed)))
    assert subgroup_inequality_checks(A, H, trusted=True, label_mode="borel").passed


def test_subgroup_checks_reject_non_subgroup():
    P = FieldParams(p=5, n=2)
    A = ElementSet(P, random_matrices(P, 3, make_rng(0)))
    with pytest.raises(ValueError):
        subgroup_inequality_checks(A, ElementSet(P, np.array([[[1, 1], [0, 1]]])))
