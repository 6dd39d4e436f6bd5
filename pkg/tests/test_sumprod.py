import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growthlab.elementset import ElementSet
from growthlab.field import FieldParams, make_rng
from growthlab.sumprod import (
    RingSet,
    cyclic_sumset,
    forgli_check,
    gk_check,
    gk_combination,
    ogrodo_check,
    productset_size,
    random_forgli_instance,
    random_ringset,
    roots_injective,
    sumprod_stats,
    sumset_size,
)

# exact values for A = {1..64} in F_10007
AP64_SUMS = 127
AP64_PRODUCTS = 1263


def diag_set(p, *diags):
    return ElementSet(FieldParams(p=p, n=3), np.array([np.diag(d) for d in diags], dtype=np.int64))


def brute_gk(A, Y, p):
    ya = {y * a % p for y in Y for a in A}
    yy = {y * z % p for y in Y for z in Y}
    s = {(a + b - c - d + e - f) % p for a in ya for b in ya for c in ya for d in ya for e in yy for f in yy}
    return len(s)


def test_cyclic_sumset():
    p = 11
    a = np.zeros(p, bool)
    a[[1, 2]] = True
    b = np.zeros(p, bool)
    b[[0, 10]] = True
    assert np.flatnonzero(cyclic_sumset(a, b, p)).tolist() == [0, 1, 2]


def test_gk_trivial_cases():
    res = gk_check(RingSet(5, [1]), RingSet(5, [1]))
    assert res.lhs == 1 and res.passed
    p = 13
    res = gk_check(RingSet(p, range(p)), RingSet(p, [1]))
    assert res.lhs == p and res.passed


def test_gk_matches_brute_force():
    p = 17
    rng = make_rng(4)
    for _ in range(5):
        A = random_ringset(p, 3, rng)
        Y = random_ringset(p, 2, rng, units=True)
        assert int(gk_combination(A, Y).sum()) == brute_gk(A.elems[:, 0].tolist(), Y.elems[:, 0].tolist(), p)


@given(st.integers(0, 2**32 - 1), st.sampled_from([101, 1009]))
@settings(max_examples=50, deadline=None)
def test_gk_random(seed, p):
    rng = make_rng(seed)
    A = random_ringset(p, int(rng.integers(1, 40)), rng)
    Y = random_ringset(p, int(rng.integers(1, 40)), rng, units=True)
    assert gk_check(A, Y).passed


def test_gk_rejects_zero_in_y():
    with pytest.raises(ValueError):
        gk_check(RingSet(7, [1]), RingSet(7, [0, 1]))


def test_sumprod_progressions():
    p = 10007
    ap = RingSet(p, range(1, 65))
    assert sumset_size(ap) == AP64_SUMS == 2 * 64 - 1
    assert productset_size(ap) == AP64_PRODUCTS
    gp = RingSet(p, [pow(2, i, p) for i in range(20)])
    assert productset_size(gp) == 39
    assert sumset_size(gp) > 39


def test_sumprod_full_line():
    st_ = sumprod_stats(RingSet(11, range(11)))
    assert (st_.sumset, st_.productset) == (11, 11)
    assert st_.exponent == pytest.approx(0.0)


def test_ringset_text_roundtrip():
    A = RingSet(7, [[1, 2], [3, 4]], 2)
    assert RingSet.from_text(A.to_text()) == A


def test_roots_injective_examples():
    assert roots_injective(diag_set(7, (1, 2, 4)))
    assert not roots_injective(diag_set(7, (1, 1, 1), (2, 2, 2)))
    # t1/t2 is 4 on both elements
    assert not roots_injective(diag_set(7, (1, 2, 4), (2, 4, 1)))


def test_forgli_identity():
    P = FieldParams(p=13, n=3)
    res = forgli_check(ElementSet.identity(P), diag_set(13, (2, 4, 5)))
    assert res.details["O"] == 1
    assert res.rhs < 1 <= res.lhs
    assert res.passed


def test_forgli_root_element():
    P = FieldParams(p=13, n=3)
    A = ElementSet(P, np.array([[[1, 1, 0], [0, 1, 0], [0, 0, 1]]]))
    res = forgli_check(A, diag_set(13, (2, 4, 5)))
    assert res.lhs == 13
    assert res.rhs == pytest.approx(13 / 14)
    assert res.passed


def test_forgli_preconditions():
    P = FieldParams(p=13, n=3)
    with pytest.raises(ValueError):
        forgli_check(ElementSet(P, np.array([np.diag([2, 4, 5])])), diag_set(13, (2, 4, 5)))
    with pytest.raises(ValueError):
        forgli_check(ElementSet.identity(P), diag_set(13, (1, 1, 1), (3, 3, 3)))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_forgli_random(seed):
    A, D = random_forgli_instance(FieldParams(p=13, n=3), make_rng(seed))
    assert forgli_check(A, D).passed


def test_ogrodo_not_applicable():
    res = ogrodo_check(RingSet(7, [[1, 1]], 2), RingSet(7, [[1, 1], [1, 2]], 2))
    assert res.status == "not-applicable"


def test_ogrodo_multiplicative():
    res = ogrodo_check(RingSet(101, [1, 5, 7]), RingSet(101, [2, 3]))
    assert res.status == "pass"
    assert res.details["R"] == 101


def test_ogrodo_torus_on_unipotent():
    P = FieldParams(p=13, n=3)
    A = ElementSet(P, np.array([[[1, 1, 0], [0, 1, 0], [0, 0, 1]]]))
    res = ogrodo_check(A, diag_set(13, (2, 4, 5)))
    assert res.status == "pass"
    assert res.details["R"] == 13


@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
@settings(max_examples=20, deadline=None)
def test_ogrodo_random_additive(seed, m):
    rng = make_rng(seed)
    A = random_ringset(101, int(rng.integers(1, 8)), rng, m=m)
    Y = random_ringset(101, int(rng.integers(1, 4)), rng, units=True, m=m)
    assert ogrodo_check(A, Y).status != "fail"
