"""Explicit slowly-growing set families used as regression fixtures."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .elementset import ElementSet
from .field import FieldParams, least_primitive_root, multiplicative_order
from .growth import GrowthReport, triple_stats

FAMILIES = ("torus_powers", "dihedral", "borel_eps", "borel_fiber", "heisenberg_box")

# Exact |AAA| from brute-force integer computations, and the constants the
# regression asserts.  Keys: (p, N) or (p, N, eps).
HEISENBERG_TABLE = {
    (1009, 2): 6493,
    (1009, 3): 30901,
    (1009, 4): 94849,
}
HEISENBERG_C = 406  # max over the table of |AAA| / N^4, rounded up
HEISENBERG_RATIO = 36  # max over the table of |AAA| / |A|, rounded up

BOREL_EPS_TABLE = {
    (1009, 16, 0.25): 781,
    (1009, 16, 0.5): 12096,
    (1009, 32, 0.25): 1597,
    (1009, 32, 0.5): 27782,
    (1009, 64, 0.25): 2591,
    (1009, 64, 0.5): 79312,
}
BOREL_EPS_C = 0.1  # max over the table of |AAA| / N^(1 + 9 eps) is 0.0953


class FamilyError(ValueError):
    pass


@dataclass(frozen=True)
class FamilySpec:
    family: str
    p: int
    N: int
    x: int | None = None
    eps: float | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise FamilyError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")
        if self.N < 1:
            raise FamilyError("N must be at least 1")

    @property
    def n(self) -> int:
        return 3 if self.family in ("dihedral", "heisenberg_box") else 2

    @property
    def params(self) -> FieldParams:
        return FieldParams(p=self.p, n=self.n)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FamilySpec":
        return cls(**json.loads(text))


def _generator(spec: FamilySpec) -> int:
    p = spec.p
    x = least_primitive_root(p) if spec.x is None else spec.x % p
    if x == 0 or multiplicative_order(x, p) != p - 1:
        raise FamilyError(f"{spec.x} does not generate the units mod {p}")
    return x


def eps_height(N: int, eps: float) -> int:
    """``floor(N^eps)``, robust to floating error at exact powers."""
    h = int(math.floor(N**eps))
    while (h + 1) ** (1 / eps) <= N * (1 + 1e-12) and (h + 1) <= N:
        h += 1
    while h > 1 and h ** (1 / eps) > N * (1 + 1e-12):
        h -= 1
    return h


def expected_size(spec: FamilySpec) -> int:
    N, p = spec.N, spec.p
    if spec.family == "torus_powers":
        return N
    if spec.family == "dihedral":
        return 4 * N + 2
    if spec.family == "borel_eps":
        return eps_height(N, spec.eps) * N
    if spec.family == "borel_fiber":
        return p * N
    return (2 * N + 1) ** 2 * (2 * N * N + 1)


def build(spec: FamilySpec) -> ElementSet:
    params = spec.params
    p, N = spec.p, spec.N
    fam = spec.family
    if fam == "torus_powers":
        x = _generator(spec)
        if N > p - 1:
            raise FamilyError("torus_powers needs N <= p - 1")
        rows = [[[pow(x, k, p), 0], [0, pow(x, -k, p)]] for k in range(1, N + 1)]
    elif fam == "dihedral":
        # diagonal and anti-diagonal 2x2 blocks (the latter of determinant -1),
        # completed to SL3 by det^-1 in the corner
        x = _generator(spec)
        if 2 * N + 1 > p - 1:
            raise FamilyError("dihedral needs 2N + 1 <= p - 1 so that all exponents are distinct")
        rows = []
        for k in range(-N, N + 1):
            a, b = pow(x, k, p), pow(x, -k, p)
            rows.append([[a, 0, 0], [0, b, 0], [0, 0, 1]])
            rows.append([[0, a, 0], [b, 0, 0], [0, 0, p - 1]])
    elif fam == "borel_eps":
        if spec.eps is None or spec.eps <= 0:
            raise FamilyError("borel_eps needs eps > 0")
        h = eps_height(N, spec.eps)
        if h < 1:
            raise FamilyError("borel_eps needs N^eps >= 1")
        if N > p or h > p - 1:
            raise FamilyError("borel_eps needs N <= p and N^eps < p")
        rows = [[[d, m % p], [0, pow(d, -1, p)]] for d in range(1, h + 1) for m in range(1, N + 1)]
    elif fam == "borel_fiber":
        x = _generator(spec)
        if N > p - 1:
            raise FamilyError("borel_fiber needs N <= p - 1")
        rows = [[[pow(x, k, p), m], [0, pow(x, -k, p)]] for k in range(1, N + 1) for m in range(p)]
    else:
        if 2 * N * N + 1 > p or N * N >= p:
            raise FamilyError("heisenberg_box needs N^2 < p and 2N^2 + 1 <= p")
        rows = [
            [[1, a % p, b % p], [0, 1, c % p], [0, 0, 1]]
            for a in range(-N, N + 1)
            for b in range(-N * N, N * N + 1)
            for c in range(-N, N + 1)
        ]
    out = ElementSet(params, np.array(rows, dtype=np.int64))
    if len(out) != expected_size(spec):  # pragma: no cover
        raise AssertionError(f"{fam}: built {len(out)} elements, expected {expected_size(spec)}")
    return out


@dataclass
class RegressionResult:
    spec: FamilySpec
    report: GrowthReport
    bound: float
    anchor: str
    passed: bool


ANCHORS = {
    "torus_powers": "|AAA| < 3|A|",
    "dihedral": "|AAA| < 3|A|",
    "borel_fiber": "|AAA| < 3|A|",
    "borel_eps": "|AAA| <= C N^(1+9 eps)",
    "heisenberg_box": "|AAA| <= C' |A|  (and <= C N^4 on the table)",
}


def regression(spec: FamilySpec) -> RegressionResult:
    A = build(spec)
    rep = triple_stats(A)
    N = spec.N
    fam = spec.family
    if fam in ("torus_powers", "dihedral", "borel_fiber"):
        bound = 3 * len(A)
        ok = rep.size_aaa < bound
    elif fam == "borel_eps":
        bound = BOREL_EPS_C * N ** (1 + 9 * spec.eps)
        ok = rep.size_aaa <= bound
    else:
        # C N^4 is only frozen on the table; the ratio bound applies everywhere
        bound = HEISENBERG_RATIO * len(A)
        ok = rep.size_aaa <= bound
        if (spec.p, N) in HEISENBERG_TABLE:
            ok = ok and rep.size_aaa <= HEISENBERG_C * N**4
    return RegressionResult(spec, rep, bound, ANCHORS[fam], ok)
