"""Torus and conjugacy-class statistics."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .elementset import ElementSet, bfs_layers, product
from .field import (
    FieldParams,
    GroupElement,
    all_matrices,
    batch_commute,
    batch_is_regular_semisimple,
    batch_kappa,
    batch_mul,
    inv,
    is_regular_semisimple,
    mul,
    trace,
)
from .growth import ball

EXACT_CLASS_LIMIT = 10**5


@dataclass
class TorusCluster:
    representative: GroupElement
    members: ElementSet

    @property
    def size(self) -> int:
        return len(self.members)


def torus_clusters(A: ElementSet, k: int, *, dedupe: bool = True, ball_k: ElementSet | None = None) -> list[TorusCluster]:
    """Centraliser slices ``{h in A_k : hg = gh}`` for regular semisimple ``g`` in ``A_k``.

    With ``dedupe`` only the first representative (canonical order) of each
    distinct member set is kept.  Sorted by size, largest first.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    Ak = ball(A, k).ball if ball_k is None else ball_k
    p = A.params.p
    rs = np.flatnonzero(batch_is_regular_semisimple(Ak.mats, p))
    seen = set()
    out = []
    for i in rs:
        g = Ak.mats[i]
        mask = batch_commute(Ak.mats, g, p)
        if dedupe:
            sig = np.flatnonzero(mask).tobytes()
            if sig in seen:
                continue
            seen.add(sig)
        rep = GroupElement(tuple(g.ravel().tolist()), A.params)
        out.append(TorusCluster(rep, Ak.filter(mask)))
    out.sort(key=lambda c: -c.size)  # stable: ties keep canonical order
    return out


def kappa_keys(mats: np.ndarray, p: int) -> np.ndarray:
    kap = batch_kappa(mats, p)
    w = p ** np.arange(kap.shape[1], dtype=np.int64)
    return kap @ w


def regular_semisimple_classes(S: ElementSet) -> int:
    """Distinct values of kappa among regular semisimple elements of ``S``."""
    p = S.params.p
    rs = batch_is_regular_semisimple(S.mats, p)
    return int(len(np.unique(kappa_keys(S.mats[rs], p))))


@dataclass
class ClassCount:
    count: int
    curve: list[tuple[int, int]]


def conj_class_count(A: ElementSet, k: int) -> ClassCount:
    """Number of regular semisimple classes met by ``A_k``, with the per-radius curve."""
    if k < 1:
        raise ValueError("k must be at least 1")
    p = A.params.p
    gens = A.symmetric(with_identity=True).mats
    layers = list(bfs_layers(A.params.identity.array[None], gens, A.params, max_radius=k))
    seen: set[int] = set()
    curve = []
    for r in range(k + 1):
        if r < len(layers):
            rs = batch_is_regular_semisimple(layers[r], p)
            seen.update(kappa_keys(layers[r][rs], p).tolist())
        if r:
            curve.append((r, len(seen)))
    return ClassCount(count=curve[-1][1], curve=curve)


def total_regular_semisimple_classes(params: FieldParams) -> int:
    return regular_semisimple_classes(ElementSet(params, all_matrices(params), _canonical=True))


# ---------------------------------------------------------------------------
# exact conjugacy classes for small groups


_CLASS_CACHE: dict[FieldParams, tuple[np.ndarray, np.ndarray]] = {}


def conjugacy_labels(params: FieldParams) -> tuple[np.ndarray, np.ndarray]:
    """Sorted keys of all of G and the class index of each, by orbit computation."""
    if params in _CLASS_CACHE:
        return _CLASS_CACHE[params]
    if params.group_order > EXACT_CLASS_LIMIT:
        raise ValueError("group too large for exact conjugacy classes")
    from .cayley import standard_generators

    G = ElementSet(params, all_matrices(params), _canonical=True)
    keys = G.keys
    p = params.p
    gens = standard_generators(params).mats
    gens_inv = np.stack([inv(GroupElement(tuple(g.ravel().tolist()), params)).array for g in gens])
    # conj[s][i] = index of s g_i s^-1
    conj = []
    for s, si in zip(gens, gens_inv):
        m = np.mod(np.matmul(np.mod(np.matmul(s[None], G.mats), p), si[None]), p)
        conj.append(np.searchsorted(keys, params.codec.keys(m)))
    label = -np.ones(len(G), dtype=np.int64)
    nxt = 0
    for start in range(len(G)):
        if label[start] >= 0:
            continue
        label[start] = nxt
        frontier = np.array([start])
        while len(frontier):
            cand = np.unique(np.concatenate([c[frontier] for c in conj]))
            cand = cand[label[cand] < 0]
            label[cand] = nxt
            frontier = cand
        nxt += 1
    _CLASS_CACHE[params] = (keys, label)
    return keys, label


def class_count(S: ElementSet) -> tuple[int, bool]:
    """``(number of G-classes meeting S, exact?)``.

    Exact via orbit labels when ``|G| <= 1e5``; otherwise a lower bound from
    kappa on the regular semisimple part.
    """
    params = S.params
    if params.group_order <= EXACT_CLASS_LIMIT:
        keys, label = conjugacy_labels(params)
        idx = np.searchsorted(keys, S.keys)
        return int(len(np.unique(label[idx]))), True
    return regular_semisimple_classes(S), False


@dataclass
class OstrogothResult:
    passed: bool
    witness: GroupElement | None
    centraliser_hits: int
    size_a: int
    size_aapa: int
    classes: int
    exact_classes: bool
    anchor: str = "|C(g) ∩ A^-1 A| >= |A| |Cl(A')| / |A A' A^-1|"


def ostrogoth_check(A: ElementSet, Aprime: ElementSet) -> OstrogothResult:
    """Find ``g`` in ``A'`` with many commuting elements in ``A⁻¹A``; the check is
    ``c_g |A A' A⁻¹| >= |A| |Cl(A')|`` in exact integers."""
    if len(A) == 0 or len(Aprime) == 0:
        raise ValueError("A and A' must be non-empty")
    p = A.params.p
    aapa = product(product(A, Aprime), A.inverse())
    ncl, exact = class_count(Aprime)
    quot = product(A.inverse(), A)
    best, best_g = -1, None
    for g in Aprime.mats:
        c = int(batch_commute(quot.mats, g, p).sum())
        if c > best:
            best, best_g = c, g
    passed = best * len(aapa) >= len(A) * ncl
    return OstrogothResult(
        passed=passed,
        witness=GroupElement(tuple(best_g.ravel().tolist()), A.params),
        centraliser_hits=best,
        size_a=len(A),
        size_aapa=len(aapa),
        classes=ncl,
        exact_classes=exact,
    )


# ---------------------------------------------------------------------------
# spectrum map in SL3


@dataclass(frozen=True)
class WorotPoint:
    c_t: int
    c_tinv: int


class NotRegularSemisimple(ValueError):
    pass


def worot_map(t: GroupElement) -> WorotPoint:
    """``(c(t), c(t⁻¹)) = (tr t⁻¹, tr t)`` read off the characteristic polynomial.

    The Cayley-Hamilton identity ``I - c(t) t + c(t⁻¹) t² - t³ = 0`` is
    verified before returning.
    """
    if t.params.n != 3:
        raise ValueError("worot_map needs n = 3")
    if not is_regular_semisimple(t):
        raise NotRegularSemisimple(f"{t} is not regular semisimple")
    p = t.params.p
    c_t = trace(inv(t))
    c_ti = trace(t)
    m = t.array
    m2 = np.mod(m @ m, p)
    m3 = np.mod(m2 @ m, p)
    lhs = np.mod(np.eye(3, dtype=np.int64) - c_t * m + c_ti * m2 - m3, p)
    if lhs.any():  # pragma: no cover - Cayley-Hamilton
        raise AssertionError("characteristic identity failed")
    return WorotPoint(c_t, c_ti)


def split_torus(params: FieldParams) -> np.ndarray:
    """All ``diag(a, b, (ab)⁻¹)`` (n=3) or ``diag(a, a⁻¹)`` (n=2)."""
    p = params.p
    units = np.arange(1, p, dtype=np.int64)
    inv_u = np.array([pow(int(x), -1, p) for x in units], dtype=np.int64)
    if params.n == 2:
        out = np.zeros((p - 1, 2, 2), dtype=np.int64)
        out[:, 0, 0] = units
        out[:, 1, 1] = inv_u
        return out
    a = np.repeat(units, p - 1)
    b = np.tile(units, p - 1)
    ia = np.repeat(inv_u, p - 1)
    ib = np.tile(inv_u, p - 1)
    out = np.zeros((len(a), 3, 3), dtype=np.int64)
    out[:, 0, 0] = a
    out[:, 1, 1] = b
    out[:, 2, 2] = np.mod(ia * ib, p)
    return out


@dataclass
class FiberReport:
    p: int
    regular: int
    max_fiber: int
    identity_ok: bool


def worot_fibers(params: FieldParams) -> FiberReport:
    """Largest fiber of ``t -> (c(t), c(t⁻¹))`` over the regular semisimple split torus."""
    if params.n != 3:
        raise ValueError("worot_fibers needs n = 3")
    p = params.p
    T = split_torus(params)
    T = T[batch_is_regular_semisimple(T, p)]
    kap = batch_kappa(T, p)  # (-tr t, tr t^-1)
    c_t = kap[:, 1]
    c_ti = np.mod(-kap[:, 0], p)
    T2 = batch_mul(T, T, p)
    T3 = batch_mul(T2, T, p)
    eye = np.eye(3, dtype=np.int64)[None]
    lhs = np.mod(eye - c_t[:, None, None] * T + c_ti[:, None, None] * T2 - T3, p)
    fibers = Counter(zip(c_t.tolist(), c_ti.tolist()))
    return FiberReport(p, len(T), max(fibers.values()) if fibers else 0, not lhs.any())
