import math

import numpy as np
import pytest

import oracles
from growthlab.cayley import (
    babai_csv,
    babai_curve,
    diameter,
    np_threshold,
    np_threshold_check,
    primes_between,
    rastropor_check,
    spectral_gap,
    standard_generators,
)
from growthlab.elementset import ElementSet
from growthlab.field import FieldParams, all_matrices, make_rng

# directed BFS (x -> g x) from the pure-Python oracle
D5 = 8
D5_LAYERS = [1, 2, 4, 8, 16, 27, 35, 20, 7]
# dense eigensolver on the symmetrised Cayley graph of SL2(F11)
G11_LAMBDA2 = 0.9045084971874771


def whole(P):
    return ElementSet(P, all_matrices(P), _canonical=True)


def test_d5_matches_oracle():
    P = FieldParams(p=5, n=2)
    res = diameter(standard_generators(P))
    assert res.diameter == D5
    assert res.layer_sizes == D5_LAYERS
    assert oracles.bfs_directed([((1, 1), (0, 1)), ((1, 0), (1, 1))], 5) == D5_LAYERS
    assert res.generating and res.reached == 120


def test_diameter_deterministic():
    P = FieldParams(p=7, n=2)
    a = diameter(standard_generators(P))
    b = diameter(standard_generators(P))
    assert a == b


def test_diameter_whole_group():
    P = FieldParams(p=3, n=2)
    assert diameter(whole(P)).diameter == 1


def test_diameter_identity():
    P = FieldParams(p=5, n=2)
    res = diameter(ElementSet.identity(P))
    assert not res.generating
    assert res.ball_sizes[-1] == 1


def test_babai_rows():
    rows = babai_curve([5])
    assert len(rows) == 1 and rows[0].diameter == D5
    rows = babai_curve([5, 7, 11, 13])
    assert [r.group_order for r in rows] == [p * (p * p - 1) for p in (5, 7, 11, 13)]
    assert babai_csv(rows).splitlines()[0] == "p,n,group_order,diameter,log_order,ratio1,ratio2"


def test_babai_sl3_f2():
    rows = babai_curve([2], n=3)
    assert rows[0].group_order == 168
    assert len(oracles.enumerate_sl(3, 2)) == 168


def test_primes_between():
    assert primes_between(5, 13) == [5, 7, 11, 13]


def test_rastropor_boundaries():
    P = FieldParams(p=3, n=2)
    G = whole(P)
    assert rastropor_check(G).status == "pass"
    half = G.filter(np.arange(24) < 12)
    assert rastropor_check(half).status == "not-applicable"


def test_rastropor_random_majority():
    P = FieldParams(p=3, n=2)
    every = all_matrices(P)
    rng = make_rng(0)
    for _ in range(50):
        A = ElementSet(P, every[rng.choice(24, 13, replace=False)])
        assert rastropor_check(A).status == "pass"


def test_np_threshold_arithmetic():
    P3 = FieldParams(p=3, n=3)
    assert np_threshold(P3) == pytest.approx(2 * 5616 ** (11 / 12))
    assert 5400 < np_threshold(P3) < 5500
    P5 = FieldParams(p=5, n=2)
    assert np_threshold(P5) > 120
    assert np_threshold_check(whole(P5)).status == "not-applicable"


def test_np_threshold_whole_group():
    P = FieldParams(p=3, n=3)
    assert np_threshold_check(whole(P)).status == "pass"


def test_spectral_two_vertices():
    P = FieldParams(p=3, n=2)
    A = ElementSet(P, np.array([[[2, 0], [0, 2]]]))
    est = spectral_gap(A)
    assert est.vertices == 2
    assert est.lambda2 == pytest.approx(-1.0, abs=1e-6)
    assert est.gap == pytest.approx(2.0, abs=1e-6)


def test_spectral_complete_graph():
    P = FieldParams(p=3, n=2)
    G = whole(P)
    A = G.difference(ElementSet.identity(P))
    est = spectral_gap(A)
    assert est.lambda2 == pytest.approx(-1 / 23, abs=1e-6)


def test_spectral_sl2_f11():
    est = spectral_gap(standard_generators(FieldParams(p=11, n=2)))
    assert est.converged
    assert est.lambda2 == pytest.approx(G11_LAMBDA2, abs=1e-6)
    assert est.gap > 0


def test_spectral_oracle_small():
    top, second = oracles.spectrum_second([((1, 1), (0, 1)), ((1, 0), (1, 1))], 5)
    assert top == pytest.approx(1.0)
    est = spectral_gap(standard_generators(FieldParams(p=5, n=2)))
    assert est.lambda2 == pytest.approx(second, abs=1e-6)
    assert math.isclose(second, (1 + math.sqrt(5)) / 4, abs_tol=1e-9)
