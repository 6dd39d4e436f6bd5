"""Balls, tripling statistics and the coset-counting inequalities."""
from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .elementset import (
    CapExceeded,
    ElementSet,
    bfs_layers,
    default_cap,
    outer_mul,
    product,
)
from .field import FieldParams, make_rng, batch_mul


@dataclass
class BallProfile:
    radii: list[tuple[int, int]]
    saturated: bool = False
    ball: ElementSet | None = field(default=None, repr=False, compare=False)

    @property
    def sizes(self) -> list[int]:
        return [s for _, s in self.radii]

    def strictly_growing_until_saturation(self) -> bool:
        """Each radius adds an element unless the ball already stopped growing."""
        s = self.sizes
        for i in range(1, len(s)):
            if s[i] < s[i - 1]:
                return False
            if s[i] == s[i - 1] and any(t != s[i - 1] for t in s[i:]):
                return False
        return True


def ball(A: ElementSet, k: int, cap: int | None = None) -> BallProfile:
    """``A_r`` for ``r = 0..k`` with generators ``A ∪ A⁻¹ ∪ {1}``."""
    if k < 0:
        raise ValueError("k must be non-negative")
    params = A.params
    gens = A.symmetric(with_identity=True).mats
    start = params.identity.array[None]
    radii = [(0, 1)]
    layers = [start]
    total = 1
    saturated = False
    it = bfs_layers(start, gens, params, max_radius=k, cap=cap)
    next(it)
    r = 0
    for layer in it:
        r += 1
        total += len(layer)
        layers.append(layer)
        radii.append((r, total))
    if r < k:
        saturated = True
        radii.extend((rr, total) for rr in range(r + 1, k + 1))
    out = ElementSet(params, np.concatenate(layers))
    return BallProfile(radii=radii, saturated=saturated, ball=out)


def ball_set(A: ElementSet, k: int, cap: int | None = None) -> ElementSet:
    return ball(A, k, cap).ball


@dataclass
class GrowthReport:
    size_a: int
    size_aa: int
    size_aaa: int
    delta: float
    tripling: float
    profile: list[tuple[int, int]] | None = None
    seed: int | None = None
    wall_time: float = 0.0
    lower_bound: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def growth_exponent(size_a: int, size_big: int) -> float:
    if size_a <= 1:
        return 0.0
    return math.log(size_big) / math.log(size_a) - 1.0


def triple_stats(
    A: ElementSet,
    *,
    profile_k: int | None = None,
    seed: int | None = None,
    cap: int | None = None,
    ambient_order: int | None = None,
) -> GrowthReport:
    if len(A) == 0:
        raise ValueError("A must be non-empty")
    t0 = time.perf_counter()
    lower = False
    try:
        aa = product(A, A, cap=cap, ambient_order=ambient_order, lower_bound_ok=True)
        aaa = product(aa, A, cap=cap, ambient_order=ambient_order, lower_bound_ok=True)
        size_aa, size_aaa = len(aa), len(aaa)
    except CapExceeded as exc:
        lower = True
        part = exc.partial
        size_aa = len(part) if part is not None else len(A)
        size_aaa = size_aa
    prof = ball(A, profile_k, cap).radii if profile_k is not None else None
    return GrowthReport(
        size_a=len(A),
        size_aa=size_aa,
        size_aaa=size_aaa,
        delta=growth_exponent(len(A), size_aaa),
        tripling=size_aaa / len(A),
        profile=prof,
        seed=seed,
        wall_time=time.perf_counter() - t0,
        lower_bound=lower,
    )


# ---------------------------------------------------------------------------
# cosets


def coset_labels(A: ElementSet, H: ElementSet, mode: str = "min") -> np.ndarray:
    """Label of the left coset ``aH`` for each ``a`` in ``A``.

    ``mode='min'`` takes the least code in ``aH``.  ``mode='borel'`` assumes
    ``H`` is the upper-triangular Borel subgroup and labels ``aH`` by the line
    through the first column of ``a``.
    """
    params = A.params
    p = params.p
    if mode == "borel":
        col = A.mats[:, :, 0].copy()
        lead = np.argmax(col != 0, axis=1)
        piv = col[np.arange(len(col)), lead]
        inv = np.array([pow(int(x), -1, p) for x in piv], dtype=np.int64)
        col = np.mod(col * inv[:, None], p)
        w = p ** np.arange(params.n, dtype=np.int64)
        return col @ w
    if mode != "min":
        raise ValueError(f"unknown coset label mode {mode!r}")
    codec = params.codec
    if not codec.single:
        raise ValueError("min-code coset labels need single-word codes")
    out = np.empty(len(A), dtype=np.uint64)
    step = max(1, (1 << 20) // max(1, len(H)))
    for lo in range(0, len(A), step):
        prods = outer_mul(A.mats[lo : lo + step], H.mats, p)
        keys = codec.keys(prods).reshape(-1, len(H))
        out[lo : lo + step] = keys.min(axis=1)
    return out


def borel_subgroup(params: FieldParams) -> ElementSet:
    from .field import all_matrices

    mats = all_matrices(params)
    n = params.n
    mask = np.ones(len(mats), dtype=bool)
    for i in range(n):
        for j in range(i):
            mask &= mats[:, i, j] == 0
    return ElementSet(params, mats[mask], _canonical=True)


def is_closed(H: ElementSet, *, samples: int = 2000, seed: int = 0) -> bool:
    """Exact closure test when ``|H|^2`` is small, random products otherwise."""
    if len(H) == 0:
        return False
    params = H.params
    if not H.contains_mask(params.identity.array[None])[0]:
        return False
    if not np.all(H.contains_mask(H.inverse().mats)):
        return False
    if len(H) ** 2 <= 10**7:
        return len(product(H, H)) == len(H)
    rng = make_rng(seed)
    i = rng.integers(0, len(H), samples)
    j = rng.integers(0, len(H), samples)
    return bool(np.all(H.contains_mask(batch_mul(H.mats[i], H.mats[j], params.p))))


@dataclass
class InequalityRecord:
    name: str
    anchor: str
    lhs: float
    rhs: float
    passed: bool


@dataclass
class SubgroupChecks:
    r: int
    records: list[InequalityRecord]

    @property
    def passed(self) -> bool:
        return all(rec.passed for rec in self.records)


def subgroup_inequality_checks(
    A: ElementSet,
    H: ElementSet,
    *,
    B: ElementSet | None = None,
    ks: tuple[int, ...] = (1, 2),
    label_mode: str = "min",
    trusted: bool = False,
) -> SubgroupChecks:
    """Coset-counting inequalities for ``A`` against a subgroup ``H``.

    ``r`` is the number of left cosets ``gH`` meeting ``A``.  Checked exactly:
    ``|AB| >= r |B ∩ H|``, ``r |A⁻¹A ∩ H| >= |A|`` and, for each ``k``,
    ``|A_{2k+1}| |E| >= |E_k| |A|`` with ``E = A⁻¹A ∩ H``.
    """
    if len(A) == 0:
        raise ValueError("A must be non-empty")
    if not trusted and not is_closed(H):
        raise ValueError("H is not closed under the group law")
    B = A if B is None else B
    r = int(len(np.unique(coset_labels(A, H, label_mode))))
    recs = []
    ab = product(A, B)
    bh = B.intersection(H)
    recs.append(InequalityRecord("coset_product", "|AB| >= r|B ∩ H|", len(ab), r * len(bh), len(ab) >= r * len(bh)))
    E = product(A.inverse(), A).intersection(H)
    recs.append(InequalityRecord("coset_pigeonhole", "|A^-1 A ∩ H| >= |A|/r", len(E), len(A) / r, r * len(E) >= len(A)))
    for k in ks:
        big = ball(A, 2 * k + 1).sizes[-1]
        ek = ball(E, k).sizes[-1]
        recs.append(
            InequalityRecord(
                f"ball_lift_k{k}",
                "|A_(2k+1)| >= |E_k| |A| / |E|",
                big,
                ek * len(A) / len(E),
                big * len(E) >= ek * len(A),
            )
        )
    return SubgroupChecks(r=r, records=recs)
