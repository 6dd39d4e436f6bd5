from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from growthlab import linalg
from growthlab.cayley import standard_generators
from growthlab.elementset import ElementSet, closure
from growthlab.field import FieldParams, GroupElement, all_matrices, make_rng, random_element
from growthlab.structure import (
    BETSON_LABELS,
    NotInParabolic,
    abelian_subgroup_index_le,
    betson_canonical,
    betson_classify,
    classify,
    fixes_line,
    fixes_point,
    generates,
    invariant_quadratic_form,
    parabolic_decompose,
    random_generating_set,
    random_parabolic,
    u1u2_factorize,
    unipotent_subgroups,
    unitriangular_group,
)

SO3_F7 = [[[0, 6, 0], [1, 0, 0], [0, 0, 1]], [[1, 0, 0], [0, 2, 5], [0, 2, 2]]]


def es(p, mats):
    return ElementSet(FieldParams(p=p, n=len(mats[0])), np.array(mats, dtype=np.int64))


# linear algebra -------------------------------------------------------------


@given(st.lists(st.integers(0, 10), min_size=9, max_size=9))
@settings(max_examples=100, deadline=None)
def test_nullspace_and_rank(vals):
    p = 11
    M = np.array(vals).reshape(3, 3)
    N = linalg.nullspace(M, p)
    assert len(N) + linalg.rank(M, p) == 3
    assert not np.mod(M @ N.T, p).any()
    assert (linalg.det(M, p) == 0) == (len(N) > 0)
    assert linalg.det(M, p) == round(np.linalg.det(M)) % p


def test_solve():
    p = 7
    M = np.array([[1, 2], [3, 4]])
    v = linalg.solve(M, [5, 6], p)
    assert np.array_equal(np.mod(M @ v, p), [5, 6])
    assert linalg.solve(np.array([[1, 1], [1, 1]]), [0, 1], p) is None


# classifiers ----------------------------------------------------------------


def test_borel_fixes_point_and_line():
    A = es(7, [[[1, 1, 0], [0, 1, 0], [0, 0, 1]], [[2, 3, 1], [0, 4, 5], [0, 0, 1]]])
    assert fixes_point(A) and fixes_line(A)


def test_standard_generators_irreducible():
    A = standard_generators(FieldParams(p=5, n=3))
    assert not fixes_point(A) and not fixes_line(A)


def test_so3_generators():
    A = es(7, SO3_F7)
    for g in A.mats:
        assert np.array_equal(g.T @ g % 7, np.eye(3))
    res = invariant_quadratic_form(A)
    assert res.found
    Q = np.array(res.form)
    for g in A.mats:
        assert np.array_equal(g.T @ Q @ g % 7, Q)
    flags = classify(A).flags
    assert flags["preserves_quadratic_form"]
    assert not flags["full_group"]


def test_full_group_sl3_f5():
    res = classify(standard_generators(FieldParams(p=5, n=3)))
    assert res.order == 372000
    assert res.flags["full_group"]
    assert not res.any_proper_flag()


def test_borel_subgroup_sl3_f7():
    A = es(7, [[[1, 1, 0], [0, 1, 0], [0, 0, 1]], np.diag([2, 4, 1])])
    res = classify(A)
    assert res.order == 21
    assert res.flags["fixes_point"] and res.flags["fixes_line"]
    assert res.flags["abelian_index_le6"] and res.flags["order_le_1080"]


def test_abelian_index():
    P = FieldParams(p=3, n=2)
    assert abelian_subgroup_index_le(ElementSet(P, all_matrices(P), _canonical=True), 6)  # Q8-type of index 3
    assert abelian_subgroup_index_le(ElementSet(P, all_matrices(P), _canonical=True), 2) is False


def test_sl2_diagonal():
    A = es(13, [np.diag([2, 7])])
    flags = classify(A).flags
    assert flags["in_borel"] and flags["in_torus_normalizer"]


def test_sl2_dihedral_pair():
    A = es(13, [np.diag([2, 7]), [[0, 1], [12, 0]]])
    res = classify(A)
    assert res.flags["in_torus_normalizer"] and not res.flags["in_borel"]
    assert res.order == 24


def test_sl2_full():
    res = classify(standard_generators(FieldParams(p=7, n=2)))
    assert res.flags["full_group"] and res.order == 336


def test_generates():
    P = FieldParams(p=7, n=3)
    assert generates(standard_generators(P))
    assert not generates(es(7, SO3_F7))
    P5 = FieldParams(p=5, n=3)
    A = random_generating_set(P5, 2, make_rng(1))
    assert len(closure(A)) == P5.group_order


# unipotent subgroups --------------------------------------------------------


def test_betson_trivial_and_full():
    P = FieldParams(p=5, n=3)
    assert betson_classify(ElementSet.identity(P)) == "trivial"
    assert betson_classify(unitriangular_group(P)) == "full"


@pytest.mark.parametrize("p", [3, 5, 7])
def test_betson_canonical_roundtrip(p):
    P = FieldParams(p=p, n=3)
    for label in BETSON_LABELS:
        assert betson_classify(betson_canonical(label, P)) == label


def test_betson_rejects_non_subgroup():
    with pytest.raises(ValueError):
        betson_classify(es(5, [[[1, 1, 0], [0, 1, 0], [0, 0, 1]]]))


def test_betson_u_f3_matches_oracle():
    subs = unipotent_subgroups(FieldParams(p=3, n=3))
    assert len(subs) == 19 == len(oracles.heisenberg_subgroups(3))
    assert Counter(betson_classify(H) for H in subs) == Counter(oracles.betson_oracle_labels(3))


# parabolic decomposition ----------------------------------------------------


def test_parabolic_block_diagonal():
    P = FieldParams(p=11, n=3)
    g = GroupElement.from_rows([[2, 3, 0], [1, 2, 0], [0, 0, 1]], P)
    parts = parabolic_decompose(g)
    assert parts.pi_minus == g
    assert parts.pi1 == [[2, 3], [1, 2]]


def test_parabolic_translation():
    P = FieldParams(p=11, n=3)
    g = GroupElement.from_rows([[1, 0, 4], [0, 1, 7], [0, 0, 1]], P)
    assert parabolic_decompose(g).pi1 == [[1, 0], [0, 1]]


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=100, deadline=None)
def test_parabolic_reassembly(seed):
    P = FieldParams(p=11, n=3)
    g = random_parabolic(P, make_rng(seed))
    parts = parabolic_decompose(g)
    assert parts.reassemble(P) == g
    assert linalg.det(parts.pi1, 11) == 1
    assert pow(parts.s, 2, 11) == parts.pi2


def test_parabolic_rejects():
    P = FieldParams(p=11, n=3)
    with pytest.raises(NotInParabolic):
        parabolic_decompose(GroupElement.from_rows([[0, 0, 1], [1, 0, 0], [0, 1, 0]], P))


# factorisation --------------------------------------------------------------


def is_upper(m):
    return np.array_equal(np.triu(m), m) and np.all(np.diag(m) == 1)


def is_lower(m):
    return np.array_equal(np.tril(m), m) and np.all(np.diag(m) == 1)


def test_factorize_special_cases():
    P = FieldParams(p=5, n=3)
    I = P.identity
    assert u1u2_factorize(I).as_tuple() == (I, I, I, I)
    g = GroupElement.from_rows([[1, 2, 3], [0, 1, 4], [0, 0, 1]], P)
    assert u1u2_factorize(g).as_tuple() == (g, I, I, I)


@pytest.mark.parametrize("p", [2, 3])
def test_factorize_exhaustive(p):
    P = FieldParams(p=p, n=3)
    for m in all_matrices(P)[:: 1 if p == 2 else 7]:
        g = GroupElement(tuple(m.ravel().tolist()), P)
        f = u1u2_factorize(g)
        assert f.product() == g
        assert is_upper(f.u1.array) and is_upper(f.u1p.array)
        assert is_lower(f.u2.array) and is_lower(f.u2p.array)


@given(st.integers(0, 2**32 - 1), st.sampled_from([5, 7, 11]))
@settings(max_examples=30, deadline=None)
def test_factorize_random(seed, p):
    g = random_element(FieldParams(p=p, n=3), make_rng(seed))
    assert u1u2_factorize(g).product() == g
