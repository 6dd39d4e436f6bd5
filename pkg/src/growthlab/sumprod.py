"""Sum-product and commuting-action inequalities, checked exactly."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import linalg
from .elementset import ElementSet, closure, outer_mul
from .field import FieldParams, batch_inv, make_rng
from .growth import ball


# ---------------------------------------------------------------------------
# ring sets


class RingSet:
    """Distinct elements of F_p (``m = 1``) or F_p × F_p (``m = 2``, componentwise)."""

    __slots__ = ("p", "m", "elems")

    def __init__(self, p: int, elems, m: int | None = None):
        arr = np.asarray(elems, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1) if m in (None, 1) else arr.reshape(-1, m)
        if m is not None and arr.shape[1] != m:
            raise ValueError(f"expected {m} components")
        if arr.shape[1] not in (1, 2):
            raise ValueError("components must be 1 or 2")
        self.p = p
        self.m = arr.shape[1]
        self.elems = np.unique(np.mod(arr, p), axis=0) if len(arr) else arr.reshape(0, self.m)

    def __len__(self):
        return len(self.elems)

    def __eq__(self, other):
        return isinstance(other, RingSet) and self.p == other.p and self.m == other.m and np.array_equal(self.elems, other.elems)

    def __repr__(self):
        return f"RingSet(m={self.m}, p={self.p}, size={len(self)})"

    @property
    def flat(self) -> np.ndarray:
        """Integer index of each element: ``a`` or ``a p + b``."""
        if self.m == 1:
            return self.elems[:, 0]
        return self.elems[:, 0] * self.p + self.elems[:, 1]

    def is_units(self) -> bool:
        return bool(np.all(self.elems != 0))

    def to_text(self) -> str:
        lines = [f"{self.m} {self.p} {len(self)}"]
        lines += [",".join(map(str, row)) for row in self.elems.tolist()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RingSet":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        m, p, count = (int(x) for x in lines[0].split())
        rows = [[int(x) for x in ln.split(",")] for ln in lines[1:]]
        if len(rows) != count:
            raise ValueError(f"header declares {count} elements, file has {len(rows)}")
        return cls(p, np.array(rows, dtype=np.int64).reshape(-1, m), m)


def _indicator(values: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros(size, dtype=bool)
    out[values] = True
    return out


def cyclic_sumset(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Indicator of ``{x + y mod p}`` from indicators ``a`` and ``b``."""
    if a.sum() * b.sum() <= 4 * p:
        xs, ys = np.flatnonzero(a), np.flatnonzero(b)
        return _indicator(np.mod(np.add.outer(xs, ys).ravel(), p), p)
    L = 1 << (2 * p - 1).bit_length()
    conv = np.fft.irfft(np.fft.rfft(a.astype(float), L) * np.fft.rfft(b.astype(float), L), L)[: 2 * p - 1]
    hit = conv > 0.5
    out = hit[:p].copy()
    out[: p - 1] |= hit[p:]
    return out


def _neg(ind: np.ndarray) -> np.ndarray:
    p = len(ind)
    return ind[(-np.arange(p)) % p]


def _product_indicator(xs: np.ndarray, ys: np.ndarray, p: int) -> np.ndarray:
    return _indicator(np.mod(np.multiply.outer(xs, ys).ravel(), p), p)


# ---------------------------------------------------------------------------
# sum-product


@dataclass
class GKResult:
    lhs: int
    bound: float
    passed: bool
    anchor: str = "|YA + YA - YA - YA + YY - YY| > min(|A||Y|, p)/2"


def gk_combination(A: RingSet, Y: RingSet) -> np.ndarray:
    p = A.p
    ya = _product_indicator(Y.elems[:, 0], A.elems[:, 0], p)
    yy = _product_indicator(Y.elems[:, 0], Y.elems[:, 0], p)
    s = cyclic_sumset(ya, ya, p)
    s = cyclic_sumset(s, _neg(ya), p)
    s = cyclic_sumset(s, _neg(ya), p)
    s = cyclic_sumset(s, yy, p)
    return cyclic_sumset(s, _neg(yy), p)


def gk_check(A: RingSet, Y: RingSet) -> GKResult:
    if A.m != 1 or Y.m != 1 or A.p != Y.p:
        raise ValueError("gk_check works in F_p")
    if len(A) == 0 or len(Y) == 0:
        raise ValueError("A and Y must be non-empty")
    if not Y.is_units():
        raise ValueError("Y must avoid 0")
    lhs = int(gk_combination(A, Y).sum())
    target = min(len(A) * len(Y), A.p)
    return GKResult(lhs, target / 2, 2 * lhs > target)


@dataclass
class SumProdStats:
    size: int
    sumset: int
    productset: int
    exponent: float


def sumset_size(A: RingSet) -> int:
    p = A.p
    if A.m == 1:
        ind = _indicator(A.elems[:, 0], p)
        return int(cyclic_sumset(ind, ind, p).sum())
    s = np.mod(A.elems[:, None, :] + A.elems[None, :, :], p).reshape(-1, 2)
    return len(np.unique(s[:, 0] * p + s[:, 1]))


def productset_size(A: RingSet) -> int:
    p = A.p
    s = np.mod(A.elems[:, None, :] * A.elems[None, :, :], p).reshape(-1, A.m)
    flat = s[:, 0] if A.m == 1 else s[:, 0] * p + s[:, 1]
    return len(np.unique(flat))


def sumprod_stats(A: RingSet) -> SumProdStats:
    if len(A) == 0:
        raise ValueError("A must be non-empty")
    s, q = sumset_size(A), productset_size(A)
    n = len(A)
    exp = math.log(max(s, q)) / math.log(n) - 1.0 if n > 1 else 0.0
    return SumProdStats(n, s, q, exp)


# ---------------------------------------------------------------------------
# torus acting on the unipotent group


def _check_diagonal(D: ElementSet):
    m = D.mats
    off = m.copy()
    for i in range(m.shape[1]):
        off[:, i, i] = 0
    if off.any():
        raise ValueError("D must consist of diagonal matrices")


def roots_injective(D: ElementSet) -> bool:
    """Every root ``t -> t_ii / t_jj`` (i != j) is injective on ``D``."""
    _check_diagonal(D)
    p = D.params.p
    n = D.params.n
    diag = np.stack([D.mats[:, i, i] for i in range(n)], axis=1)
    inv = np.array([[pow(int(x), -1, p) for x in row] for row in diag], dtype=np.int64).reshape(diag.shape)
    for i in range(n):
        for j in range(i + 1, n):
            vals = np.mod(diag[:, i] * inv[:, j], p)
            if len(np.unique(vals)) != len(vals):
                return False
    return True


def unipotent_mask(mats: np.ndarray) -> np.ndarray:
    n = mats.shape[1]
    ok = np.ones(len(mats), dtype=bool)
    for i in range(n):
        ok &= mats[:, i, i] == 1
        for j in range(i):
            ok &= mats[:, i, j] == 0
    return ok


def conjugates(Y: np.ndarray, A: np.ndarray, p: int) -> np.ndarray:
    """All ``y a y⁻¹`` for ``y`` in ``Y``, ``a`` in ``A``."""
    ya = outer_mul(Y, A, p).reshape(len(Y), len(A), *A.shape[1:])
    yi = batch_inv(Y, p)
    return np.mod(np.matmul(ya, yi[:, None]), p).reshape(-1, *A.shape[1:])


@dataclass
class InequalityResult:
    lhs: int
    rhs: float
    passed: bool
    status: str
    anchor: str
    details: dict = field(default_factory=dict)


def forgli_check(A: ElementSet, D: ElementSet, cap: int | None = None) -> InequalityResult:
    """``|(A ∪ D)_20 ∩ U| > |A||D||O| / (|A||D| + |O|)``."""
    anchor = "|(A ∪ D)_20 ∩ U| > |A||D||O| / (|A||D| + |O|)"
    params = A.params
    if params.n != 3 or params.p <= 3:
        raise ValueError("forgli_check needs n = 3 and p > 3")
    if not np.all(unipotent_mask(A.mats)):
        raise ValueError("A must lie in the upper unitriangular group")
    if not roots_injective(D):
        raise ValueError("D must have every root injective")
    p = params.p
    Dgrp = closure(D, cap=cap)
    O = closure(ElementSet(params, conjugates(Dgrp.mats, A.mats, p)), cap=cap)
    if not np.all(unipotent_mask(O.mats)):  # pragma: no cover
        raise AssertionError("O left the unipotent group")
    ball20 = ball(A.union(D), 20, cap=cap).ball
    lhs = int(unipotent_mask(ball20.mats).sum())
    a, d, o = len(A), len(D), len(O)
    passed = lhs * (a * d + o) > a * d * o
    return InequalityResult(lhs, a * d * o / (a * d + o), passed, "pass" if passed else "fail", anchor, {"O": o})


# ---------------------------------------------------------------------------
# abelian actions


@dataclass
class AdditiveAction:
    """``Y ⊂ (F_p*)^m`` acting on ``A ⊂ F_p^m`` by componentwise multiplication."""

    A: RingSet
    Y: RingSet


def _additive_span_rank(vecs: np.ndarray, p: int) -> int:
    return linalg.rank(vecs, p) if len(vecs) else 0


def _mult_closure(Y: RingSet) -> np.ndarray:
    p, m = Y.p, Y.m
    grp = {tuple([1] * m)}
    frontier = list(grp)
    gens = [tuple(r) for r in Y.elems.tolist()]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = tuple(a * b % p for a, b in zip(x, g))
                if y not in grp:
                    grp.add(y)
                    nxt.append(y)
        frontier = nxt
    return np.array(sorted(grp), dtype=np.int64)


def _additive_ball(S: np.ndarray, p: int, m: int, k: int) -> int:
    """Size of the k-ball of ``S ∪ -S ∪ {0}`` in ``(Z/p)^m``."""
    size = p**m
    step = np.zeros(size, dtype=bool)
    flat = S[:, 0] if m == 1 else S[:, 0] * p + S[:, 1]
    neg = np.mod(-S, p)
    nflat = neg[:, 0] if m == 1 else neg[:, 0] * p + neg[:, 1]
    step[flat] = True
    step[nflat] = True
    step[0] = True
    cur = np.zeros(size, dtype=bool)
    cur[0] = True
    moves = np.flatnonzero(step)
    for _ in range(k):
        pts = np.flatnonzero(cur)
        if m == 1:
            new = np.mod(np.add.outer(pts, moves), p).ravel()
        else:
            a = np.add.outer(pts // p, moves // p) % p
            b = np.add.outer(pts % p, moves % p) % p
            new = (a * p + b).ravel()
        nxt = np.zeros(size, dtype=bool)
        nxt[new] = True
        if np.array_equal(nxt, cur):
            break
        cur = nxt
    return int(cur.sum())


def ogrodo_additive(A: RingSet, Y: RingSet) -> InequalityResult:
    anchor = "|(Y_2(A))_6| > min(|A||Y|, |R|)/2"
    p, m = A.p, A.m
    if Y.m != m or Y.p != p:
        raise ValueError("A and Y must live in the same ring")
    if not Y.is_units():
        raise ValueError("Y must consist of units")
    grp = _mult_closure(Y)
    R_rank = _additive_span_rank(np.mod((grp[:, None, :] * A.elems[None, :, :]).reshape(-1, m), p), p)
    R = p**R_rank
    # fixed-point-freeness on R for every y in Y^-1 Y
    yinv = np.array([[pow(int(v), -1, p) for v in row] for row in Y.elems], dtype=np.int64).reshape(-1, m)
    quot = np.unique(np.mod(yinv[:, None, :] * Y.elems[None, :, :], p).reshape(-1, m), axis=0)
    Rbasis = linalg.rref(np.mod((grp[:, None, :] * A.elems[None, :, :]).reshape(-1, m), p), p)[0][:R_rank]
    for y in quot:
        if np.all(y == 1):
            continue
        # fixed points of r -> y r on R: r with (y - 1) r = 0 componentwise
        M = np.mod(Rbasis * (y - 1)[None, :], p).T
        fixed_dim = R_rank - linalg.rank(M, p) if R_rank else 0
        if fixed_dim not in (0, R_rank):
            return InequalityResult(0, 0.0, True, "not-applicable", anchor, {"reason": "fixed points"})
        if fixed_dim == R_rank and R_rank > 0:
            # y acts as the identity on R: same automorphism as e; allowed
            continue
    # distinct automorphisms of R induced by Y
    if R_rank:
        images = {tuple(np.mod(Rbasis * y[None, :], p).ravel().tolist()) for y in Y.elems}
        ny = len(images)
    else:
        ny = 1
    # Y_2 = products of at most two elements of Y ∪ Y^-1 ∪ {1}
    y0 = np.unique(np.concatenate([Y.elems, yinv, np.ones((1, m), dtype=np.int64)]), axis=0)
    y2 = np.unique(np.mod(y0[:, None, :] * y0[None, :, :], p).reshape(-1, m), axis=0)
    y2a = np.unique(np.mod(y2[:, None, :] * A.elems[None, :, :], p).reshape(-1, m), axis=0)
    lhs = _additive_ball(y2a, p, m, 6)
    target = min(len(A) * ny, R)
    passed = 2 * lhs > target
    return InequalityResult(lhs, target / 2, passed, "pass" if passed else "fail", anchor, {"R": R, "Y": ny})


def ogrodo_conjugation(A: ElementSet, Y: ElementSet, cap: int | None = 10**6) -> InequalityResult:
    """``Y`` acts on the group generated by its conjugates of ``A`` by ``g -> y g y⁻¹``."""
    anchor = "|(Y_2(A))_6| > min(|A||Y|, |R|)/2"
    params = A.params
    p = params.p
    Ygrp = closure(Y, cap=cap)
    R = closure(ElementSet(params, conjugates(Ygrp.mats, A.mats, p)), cap=cap)
    Rgens = R.mats
    quot = ElementSet(params, outer_mul(batch_inv(Y.mats, p), Y.mats, p))
    for y in quot.mats:
        moved = conjugates(y[None], Rgens, p)
        fixed = int(np.all(moved == Rgens, axis=(1, 2)).sum())
        if fixed not in (1, len(R)):
            return InequalityResult(0, 0.0, True, "not-applicable", anchor, {"reason": "fixed points"})
    sigs = {conjugates(y[None], Rgens, p).tobytes() for y in Y.mats}
    ny = len(sigs)
    Y2 = ball(Y, 2).ball
    y2a = ElementSet(params, conjugates(Y2.mats, A.mats, p))
    lhs = ball(y2a, 6).sizes[-1]
    target = min(len(A) * ny, len(R))
    passed = 2 * lhs > target
    return InequalityResult(lhs, target / 2, passed, "pass" if passed else "fail", anchor, {"R": len(R), "Y": ny})


def ogrodo_check(A, Y, cap: int | None = 10**6) -> InequalityResult:
    """Dispatch on the instance type: ring sets (multiplicative action on an
    additive group) or element sets (conjugation action)."""
    if isinstance(A, RingSet):
        return ogrodo_additive(A, Y)
    return ogrodo_conjugation(A, Y, cap)


def random_ringset(p: int, size: int, rng, *, units: bool = False, m: int = 1) -> RingSet:
    lo = 1 if units else 0
    if m == 1:
        vals = rng.choice(np.arange(lo, p), size=min(size, p - lo), replace=False)
        return RingSet(p, vals)
    span = (p - lo) ** 2
    idx = rng.choice(span, size=min(size, span), replace=False)
    return RingSet(p, np.stack([idx // (p - lo) + lo, idx % (p - lo) + lo], axis=1), 2)


def random_forgli_instance(params: FieldParams, rng, *, max_a: int = 3, max_d: int = 2) -> tuple[ElementSet, ElementSet]:
    """Random ``A`` in the unitriangular group and diagonal ``D`` with injective roots."""
    p = params.p
    k = int(rng.integers(1, max_a + 1))
    rows = [[[1, a, b], [0, 1, c], [0, 0, 1]] for a, b, c in rng.integers(0, p, (k, 3)).tolist()]
    A = ElementSet(params, np.array(rows, dtype=np.int64))
    while True:
        kd = int(rng.integers(1, max_d + 1))
        ds = [np.diag([x, y, pow(x * y, -1, p)]) for x, y in rng.integers(1, p, (kd, 2)).tolist()]
        D = ElementSet(params, np.array(ds, dtype=np.int64))
        if roots_injective(D):
            return A, D
