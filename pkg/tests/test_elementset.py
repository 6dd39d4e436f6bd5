import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from growthlab import elementset
from growthlab.elementset import CapExceeded, ElementSet, KeyAccumulator, bfs_layers, closure, product
from growthlab.field import Codec, FieldParams, GroupElement, ParamsMismatch, make_rng, random_matrices


def diag2(a, b, p=13):
    return [[a, 0], [0, b]]


def brute_product(A, B):
    p = A.params.p
    return {tuple((a @ b % p).ravel().tolist()) for a in A.mats for b in B.mats}


def as_set(S):
    return {tuple(m.ravel().tolist()) for m in S.mats}


def test_identity_times_a():
    P = FieldParams(p=7, n=2)
    A = ElementSet(P, random_matrices(P, 10, make_rng(1)))
    assert product(ElementSet.identity(P), A) == A


def test_diagonal_square():
    P = FieldParams(p=13, n=2)
    A = ElementSet(P, np.array([diag2(2, 7), diag2(4, 10)]))
    expected = ElementSet(P, np.array([diag2(4, 10), diag2(8, 5), diag2(3, 9)]))
    assert product(A, A) == expected


@pytest.mark.parametrize("n,p", [(2, 7), (3, 5), (3, 139), (3, 1009), (3, 16381)])
def test_product_matches_brute_force(n, p):
    P = FieldParams(p=p, n=n)
    rng = make_rng(p)
    A = ElementSet(P, random_matrices(P, 60, rng))
    B = ElementSet(P, random_matrices(P, 40, rng))
    C = product(A, B)
    assert as_set(C) == brute_product(A, B)
    assert list(C.codes()) == sorted(C.codes())


@given(st.integers(0, 2**32 - 1), st.integers(1, 30), st.integers(1, 30))
@settings(max_examples=100, deadline=None)
def test_product_size_bound(seed, ka, kb):
    P = FieldParams(p=5, n=2)
    rng = make_rng(seed)
    A = ElementSet(P, random_matrices(P, ka, rng))
    B = ElementSet(P, random_matrices(P, kb, rng))
    assert len(product(A, B)) <= len(A) * len(B)


def test_product_chunking_independent(monkeypatch):
    P = FieldParams(p=1009, n=3)
    rng = make_rng(5)
    A = ElementSet(P, random_matrices(P, 90, rng))
    ref = product(A, A)
    monkeypatch.setattr(elementset, "CHUNK_ROWS", 64)
    assert product(A, A) == ref
    assert product(A, A, workers=3) == ref


def test_hash_collisions_resolved_exactly(monkeypatch):
    # a constant hash makes every pair collide; dedup must still be exact
    P = FieldParams(p=1009, n=3)
    rng = make_rng(2)
    mats = random_matrices(P, 50, rng)
    mats = np.concatenate([mats, mats[:20]])
    monkeypatch.setattr(Codec, "hashes", lambda self, keys: np.zeros(len(keys), dtype=np.uint64))
    codec = P.codec
    idx = codec.unique_index(codec.keys(mats))
    assert len(idx) == 50
    acc = KeyAccumulator(P)
    acc.add(mats)
    assert len(acc.result()) == 50


def test_params_mismatch():
    A = ElementSet.identity(FieldParams(p=5, n=2))
    B = ElementSet.identity(FieldParams(p=7, n=2))
    with pytest.raises(ParamsMismatch):
        product(A, B)


def test_cap_exceeded_partial():
    P = FieldParams(p=7, n=2)
    A = ElementSet(P, random_matrices(P, 40, make_rng(0)))
    with pytest.raises(CapExceeded):
        product(A, A, cap=50)
    with pytest.raises(CapExceeded) as exc:
        product(A, A, cap=50, lower_bound_ok=True)
    assert exc.value.partial is not None and len(exc.value.partial) > 50


def test_cap_env(monkeypatch):
    monkeypatch.setenv("GROWTHLAB_CAP_BYTES", "800")
    assert elementset.default_cap() == 100


def test_closure_examples():
    P = FieldParams(p=3, n=2)
    assert closure(ElementSet.identity(P)) == ElementSet.identity(P)
    gens = ElementSet(P, np.array([[[1, 1], [0, 1]], [[1, 0], [1, 1]]]))
    assert len(closure(gens)) == 24
    P7 = FieldParams(p=7, n=3)
    u = ElementSet(P7, np.array([[[1, 1, 0], [0, 1, 0], [0, 0, 1]]]))
    assert len(closure(u)) == 7


def test_set_operations():
    P = FieldParams(p=5, n=2)
    rng = make_rng(4)
    A = ElementSet(P, random_matrices(P, 20, rng))
    B = ElementSet(P, random_matrices(P, 20, rng))
    assert as_set(A.union(B)) == as_set(A) | as_set(B)
    assert as_set(A.intersection(B)) == as_set(A) & as_set(B)
    assert as_set(A.difference(B)) == as_set(A) - as_set(B)
    assert A.inverse().inverse() == A
    assert ElementSet.identity(P).issubset(A.symmetric(with_identity=True))


def test_text_roundtrip(tmp_path):
    P = FieldParams(p=1009, n=3)
    A = ElementSet(P, random_matrices(P, 30, make_rng(8)))
    assert ElementSet.from_text(A.to_text()) == A
    path = tmp_path / "a.txt"
    A.save(str(path))
    assert ElementSet.load(str(path)) == A


def test_from_text_rejects_bad_header():
    with pytest.raises(ValueError):
        ElementSet.from_text("3 4 1\n1 0 0 0 1 0 0 0 1\n")


def test_bfs_layers_partition():
    P = FieldParams(p=5, n=2)
    gens = np.array([[[1, 1], [0, 1]], [[1, 0], [1, 1]]])
    layers = list(bfs_layers(P.identity.array[None], gens, P))
    assert sum(len(x) for x in layers) == 120
    codes = np.concatenate([P.codec.keys(x) for x in layers])
    assert len(np.unique(codes)) == 120


def test_contains():
    P = FieldParams(p=5, n=2)
    A = ElementSet(P, np.array([[[1, 1], [0, 1]]]))
    assert GroupElement.from_rows([[1, 1], [0, 1]], P) in A
    assert P.identity not in A
