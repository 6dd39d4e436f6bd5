import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growthlab.cayley import standard_generators
from growthlab.elementset import ElementSet
from growthlab.field import FieldParams, GroupElement, batch_is_regular_semisimple, discriminant, make_rng, random_matrices
from growthlab.structure import random_generating_set
from growthlab.varieties import (
    EscapeExhausted,
    PolySparse,
    Variety,
    det_poly,
    disc_poly,
    disc_variety,
    escape,
    escape_regss,
    eval_poly,
)

# first escape witness for the standard generators of SL3(F7), x = I
STD_F7_ESCAPE = ([[0, 1, 0], [0, 0, 1], [1, 0, 0]], 1)

terms = st.dictionaries(
    st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 3)),
    st.integers(-50, 50),
    max_size=6,
)


def test_constant_and_det():
    P = FieldParams(p=7, n=3)
    g = GroupElement.from_rows([[1, 2, 3], [0, 1, 4], [0, 0, 1]], P)
    assert eval_poly(PolySparse.const(9, 1), g) == 1
    assert eval_poly(det_poly(3) - 1, g) == 0


@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 5), (3, 7), (3, 13)]))
@settings(max_examples=50, deadline=None)
def test_det_minus_one_vanishes(seed, np_):
    n, p = np_
    P = FieldParams(p=p, n=n)
    mats = random_matrices(P, 20, make_rng(seed))
    assert not (det_poly(n) - 1).eval_batch(mats.reshape(20, -1), p).any()


@pytest.mark.parametrize("n,p", [(2, 7), (3, 7), (3, 11)])
def test_disc_poly_matches_numeric(n, p):
    P = FieldParams(p=p, n=n)
    assert disc_poly(n).eval(P.identity) == 0
    mats = random_matrices(P, 300, make_rng(p))
    vals = disc_poly(n).eval_batch(mats.reshape(300, -1), p)
    for m, v in zip(mats, vals):
        assert v == discriminant(GroupElement(tuple(m.ravel().tolist()), P))
    assert np.array_equal(vals != 0, batch_is_regular_semisimple(mats, p))


def test_disc_poly_shape():
    f = disc_poly(3)
    assert f.degree == 6
    assert len(f.terms) == 121


@given(terms, terms, st.lists(st.integers(0, 100), min_size=3, max_size=3))
@settings(max_examples=100, deadline=None)
def test_poly_ring_laws(a, b, x):
    p = 101
    f, g = PolySparse.from_dict(3, a), PolySparse.from_dict(3, b)
    ev = lambda h: h.eval(np.array(x), p)
    assert ev(f + g) == (ev(f) + ev(g)) % p
    assert ev(f * g) == ev(f) * ev(g) % p
    assert ev(f - g) == (ev(f) - ev(g)) % p
    assert PolySparse.from_line(f.to_line(), 3) == f


def test_poly_line_errors():
    with pytest.raises(ValueError):
        PolySparse.from_line("3:1,2", 3)
    with pytest.raises(ValueError):
        PolySparse.from_line("x:1,2,3", 3)
    assert PolySparse.from_line("0", 2).is_zero()


def test_variety_text_roundtrip():
    V = Variety([det_poly(2) - 1, PolySparse.var(4, 0)])
    assert Variety.from_text(V.to_text(), 4) == V


def test_escape_trivial_cases():
    P = FieldParams(p=7, n=3)
    A = standard_generators(P)
    x = GroupElement.diag((1, 2, 4), P)
    res = escape(A, disc_variety(3), x)
    assert (res.g, res.m) == (P.identity, 0)
    res = escape(A, Variety([PolySparse.const(9, 1)]), P.identity)
    assert (res.g, res.m) == (P.identity, 0)


def test_escape_standard_generators():
    P = FieldParams(p=7, n=3)
    res = escape(standard_generators(P), disc_variety(3), P.identity)
    assert (res.g.rows(), res.m) == STD_F7_ESCAPE
    assert escape(standard_generators(P), disc_variety(3), P.identity) == res


def test_escape_exhausted():
    P = FieldParams(p=7, n=3)
    U = ElementSet(P, np.array([[[1, 1, 0], [0, 1, 0], [0, 0, 1]]]))
    with pytest.raises(EscapeExhausted):
        escape_regss(U, P.identity, m_max=3)


def test_escape_regss_cases():
    P = FieldParams(p=7, n=3)
    t = GroupElement.diag((1, 4, 2), P)
    A = ElementSet(P, t.array[None])
    assert escape_regss(A, t).m == 0
    res = escape_regss(A, P.identity)
    assert (res.g, res.m) == (t, 1)


def test_escape_random_generating_sets():
    P = FieldParams(p=7, n=3)
    rng = make_rng(0)
    for _ in range(10):
        A = random_generating_set(P, 2, rng)
        res = escape_regss(A, P.identity, m_max=10)
        assert res.m <= 10
        assert discriminant(res.g) != 0
