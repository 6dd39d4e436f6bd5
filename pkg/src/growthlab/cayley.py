"""Cayley-graph measurements: diameters, growth curves, large-set thresholds
and a spectral-gap estimate."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .elementset import CapExceeded, ElementSet, bfs_layers, closure, outer_mul, product
from .field import FieldParams, GroupElement, batch_inv, is_prime
from .growth import ball

BABAI_COLUMNS = ("p", "n", "group_order", "diameter", "log_order", "ratio1", "ratio2")
DEFAULT_BABAI_CAP = 2 * 10**7
DEFAULT_SPECTRAL_CAP = 2 * 10**5


@dataclass
class DiameterResult:
    diameter: int
    layer_sizes: list[int]
    saturated: bool
    reached: int
    generating: bool
    symmetric: bool = False

    @property
    def ball_sizes(self) -> list[int]:
        return list(np.cumsum(self.layer_sizes).tolist())


def diameter(A: ElementSet, *, symmetric: bool = False, cap: int | None = None) -> DiameterResult:
    """Eccentricity of the identity in the Cayley graph with edges ``g -> a g``.

    Only ``A`` itself is used unless ``symmetric`` is set, in which case the
    generators are ``A ∪ A⁻¹``.
    """
    params = A.params
    if len(A) == 0:
        raise ValueError("A must be non-empty")
    gens = A.symmetric(with_identity=False).mats if symmetric else A.mats
    sizes = [len(l) for l in bfs_layers(params.identity.array[None], gens, params, cap=cap)]
    reached = sum(sizes)
    return DiameterResult(
        diameter=len(sizes) - 1,
        layer_sizes=sizes,
        saturated=True,
        reached=reached,
        generating=reached == params.group_order,
        symmetric=symmetric,
    )


def standard_generators(params: FieldParams) -> ElementSet:
    """``I + E12`` together with ``I + E21`` (n=2) or the cyclic permutation matrix (n=3)."""
    if params.n == 2:
        rows = [[[1, 1], [0, 1]], [[1, 0], [1, 1]]]
    else:
        rows = [[[1, 1, 0], [0, 1, 0], [0, 0, 1]], [[0, 0, 1], [1, 0, 0], [0, 1, 0]]]
    return ElementSet(params, np.array(rows, dtype=np.int64))


@dataclass
class BabaiRow:
    p: int
    n: int
    group_order: int
    diameter: int | None
    log_order: float
    ratio1: float | None
    ratio2: float | None
    skipped: bool = False
    ball_sizes: list[int] = field(default_factory=list, repr=False)

    def as_tuple(self) -> tuple:
        return (self.p, self.n, self.group_order, self.diameter, self.log_order, self.ratio1, self.ratio2)


def babai_curve(primes, n: int = 2, *, recipe="standard", cap: int = DEFAULT_BABAI_CAP, symmetric=False) -> list[BabaiRow]:
    """One row per prime; ``recipe`` maps ``FieldParams`` to a generating set
    (or is the string ``'standard'``)."""
    rows = []
    for p in primes:
        params = FieldParams(p=p, n=n)
        order = params.group_order
        lo = math.log(order)
        if order > cap:
            rows.append(BabaiRow(p, n, order, None, lo, None, None, skipped=True))
            continue
        gens = standard_generators(params) if recipe == "standard" else recipe(params)
        d = diameter(gens, symmetric=symmetric)
        rows.append(
            BabaiRow(p, n, order, d.diameter, lo, d.diameter / lo, d.diameter / lo**2, ball_sizes=d.ball_sizes)
        )
    return rows


def _fmt(x) -> str:
    if x is None:
        return "skipped"
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def babai_csv(rows: list[BabaiRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BABAI_COLUMNS)
    for r in rows:
        w.writerow([_fmt(x) for x in r.as_tuple()])
    return buf.getvalue()


def primes_between(lo: int, hi: int) -> list[int]:
    return [q for q in range(lo, hi + 1) if is_prime(q)]


@dataclass
class CheckResult:
    status: str  # "pass", "fail" or "not-applicable"
    anchor: str
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status != "fail"


def rastropor_check(A: ElementSet, group_order: int | None = None) -> CheckResult:
    """A set covering more than half the group squares to the whole group."""
    anchor = "|A| > |G|/2  =>  AA = G"
    order = A.params.group_order if group_order is None else group_order
    if 2 * len(A) <= order:
        return CheckResult("not-applicable", anchor, {"size": len(A), "group_order": order})
    aa = product(A, A, ambient_order=order)
    ok = len(aa) == order
    return CheckResult("pass" if ok else "fail", anchor, {"size": len(A), "group_order": order, "size_aa": len(aa)})


def np_threshold(params: FieldParams) -> float:
    n = params.n
    return 2.0 * params.group_order ** (1.0 - 1.0 / (3 * (n + 1)))


def np_threshold_check(A: ElementSet) -> CheckResult:
    """Sets above ``2|G|^(1 - 1/(3(n+1)))`` triple to the whole group."""
    anchor = "|A| > 2|G|^(1-1/(3(n+1)))  =>  AAA = G"
    params = A.params
    order = params.group_order
    thr = np_threshold(params)
    info = {"size": len(A), "threshold": thr, "group_order": order}
    if not len(A) > thr:
        return CheckResult("not-applicable", anchor, info)
    aa = product(A, A, ambient_order=order)
    aaa = product(aa, A, ambient_order=order)
    info["size_aaa"] = len(aaa)
    return CheckResult("pass" if len(aaa) == order else "fail", anchor, info)


@dataclass
class SpectralEstimate:
    lambda1: float
    lambda2: float
    gap: float
    iterations: int
    tolerance: float
    converged: bool
    vertices: int


def cayley_permutations(A: ElementSet, group: ElementSet, symmetric: bool = True) -> np.ndarray:
    """Row ``s`` holds the index of ``s g`` for each ``g`` in ``group``.

    With ``symmetric`` the rows run over the multiset ``A`` followed by ``A⁻¹``.
    """
    p = A.params.p
    gens = A.mats
    if symmetric:
        gens = np.concatenate([gens, batch_inv(gens, p)])
    keys = group.keys
    codec = A.params.codec
    perms = np.empty((len(gens), len(group)), dtype=np.int64)
    for i, s in enumerate(gens):
        moved = codec.keys(np.mod(np.matmul(s[None], group.mats), p))
        perms[i] = np.searchsorted(keys, moved)
    return perms


def adjacency_matrix(A: ElementSet, group: ElementSet | None = None) -> np.ndarray:
    """Dense normalised adjacency operator of the symmetrised multigraph."""
    group = closure(A) if group is None else group
    perms = cayley_permutations(A, group)
    m = len(group)
    M = np.zeros((m, m))
    rows = np.arange(m)
    for perm in perms:
        np.add.at(M, (rows, perm), 1.0)
    return M / len(perms)


def spectral_gap(
    A: ElementSet,
    tol: float = 1e-8,
    *,
    max_iter: int = 100_000,
    cap: int = DEFAULT_SPECTRAL_CAP,
    seed: int = 0,
) -> SpectralEstimate:
    """Power iteration on ``(M + I)/2`` restricted to mean-zero vectors.

    ``M`` averages over the multiset ``A ∪ A⁻¹`` on the vertex set ``<A>``.
    The top eigenvalue of the shifted operator on the complement of the
    constants is ``(1 + lambda2)/2``.
    """
    group = closure(A, cap=cap)
    perms = cayley_permutations(A, group)
    m = len(group)
    deg = len(perms)

    def apply(v):
        out = np.zeros_like(v)
        for perm in perms:
            out += v[perm]
        return out / deg

    ones = np.ones(m)
    lam1 = float(ones @ apply(ones) / m)
    if m == 1:
        return SpectralEstimate(lam1, lam1, 0.0, 0, tol, True, 1)
    rng = np.random.Generator(np.random.Philox(seed))
    v = rng.standard_normal(m)
    v -= v.mean()
    v /= np.linalg.norm(v)
    mu = 0.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        w = 0.5 * (v + apply(v))
        w -= w.mean()
        mu = float(v @ w)
        resid = float(np.linalg.norm(w - mu * v))
        nrm = np.linalg.norm(w)
        if nrm == 0.0 or resid < tol:
            converged = True
            break
        v = w / nrm
    lam2 = 2.0 * mu - 1.0
    return SpectralEstimate(lam1, lam2, lam1 - lam2, it, tol, converged, m)
