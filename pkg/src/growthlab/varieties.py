"""Sparse polynomials in the matrix entries and escape from varieties."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping

import numpy as np

from .elementset import ElementSet, bfs_layers
from .field import FieldParams, GroupElement, batch_mul

Exps = tuple[int, ...]


@dataclass(frozen=True)
class PolySparse:
    """Polynomial with integer coefficients in ``nvars`` variables.

    Terms are kept sorted by exponent vector, with no zero coefficients.
    Coefficients are reduced mod ``p`` only at evaluation time, so one
    polynomial serves every prime.
    """

    nvars: int
    terms: tuple[tuple[Exps, int], ...]

    @classmethod
    def from_dict(cls, nvars: int, d: Mapping[Exps, int]) -> "PolySparse":
        terms = []
        for e, c in d.items():
            if len(e) != nvars:
                raise ValueError(f"exponent {e} has wrong arity for {nvars} variables")
            if any(x < 0 for x in e):
                raise ValueError("negative exponent")
            if c:
                terms.append((tuple(int(x) for x in e), int(c)))
        return cls(nvars, tuple(sorted(terms)))

    @classmethod
    def const(cls, nvars: int, c: int) -> "PolySparse":
        return cls.from_dict(nvars, {(0,) * nvars: c})

    @classmethod
    def var(cls, nvars: int, i: int) -> "PolySparse":
        e = [0] * nvars
        e[i] = 1
        return cls.from_dict(nvars, {tuple(e): 1})

    def as_dict(self) -> dict[Exps, int]:
        return dict(self.terms)

    @property
    def degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def _coerce(self, other) -> "PolySparse":
        if isinstance(other, PolySparse):
            if other.nvars != self.nvars:
                raise ValueError("arity mismatch")
            return other
        return PolySparse.const(self.nvars, int(other))

    def __add__(self, other) -> "PolySparse":
        other = self._coerce(other)
        d = self.as_dict()
        for e, c in other.terms:
            d[e] = d.get(e, 0) + c
        return PolySparse.from_dict(self.nvars, d)

    __radd__ = __add__

    def __neg__(self) -> "PolySparse":
        return PolySparse(self.nvars, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other) -> "PolySparse":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "PolySparse":
        return self._coerce(other) - self

    def __mul__(self, other) -> "PolySparse":
        other = self._coerce(other)
        d: dict[Exps, int] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = tuple(a + b for a, b in zip(e1, e2))
                d[e] = d.get(e, 0) + c1 * c2
        return PolySparse.from_dict(self.nvars, d)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "PolySparse":
        out = PolySparse.const(self.nvars, 1)
        for _ in range(k):
            out = out * self
        return out

    def reduce(self, p: int) -> "PolySparse":
        return PolySparse.from_dict(self.nvars, {e: c % p for e, c in self.terms})

    # evaluation -------------------------------------------------------------
    def eval_batch(self, xs: np.ndarray, p: int) -> np.ndarray:
        """Values mod ``p`` at each row of ``xs`` (shape ``(k, nvars)``)."""
        xs = np.asarray(xs, dtype=np.int64).reshape(-1, self.nvars) % p
        out = np.zeros(len(xs), dtype=np.int64)
        powers: dict[tuple[int, int], np.ndarray] = {}

        def pw(i, e):
            key = (i, e)
            if key not in powers:
                v = np.ones(len(xs), dtype=np.int64)
                for _ in range(e):
                    v = v * xs[:, i] % p
                powers[key] = v
            return powers[key]

        for e, c in self.terms:
            v = np.full(len(xs), c % p, dtype=np.int64)
            for i, k in enumerate(e):
                if k:
                    v = v * pw(i, k) % p
            out = (out + v) % p
        return out

    def eval(self, g, p: int | None = None) -> int:
        if isinstance(g, GroupElement):
            if len(g.entries) != self.nvars:
                raise ValueError(f"polynomial has {self.nvars} variables, element has {len(g.entries)} entries")
            return int(self.eval_batch(np.array(g.entries)[None], g.params.p)[0])
        if p is None:
            raise ValueError("p required when evaluating at a plain vector")
        vals = np.asarray(g)
        if vals.size != self.nvars:
            raise ValueError("arity mismatch")
        return int(self.eval_batch(vals[None], p)[0])

    # text format ------------------------------------------------------------
    def to_line(self) -> str:
        if not self.terms:
            return "0"
        return "+".join(f"{c}:{','.join(map(str, e))}" for e, c in self.terms)

    @classmethod
    def from_line(cls, line: str, nvars: int) -> "PolySparse":
        line = line.strip()
        if line == "0":
            return cls(nvars, ())
        d: dict[Exps, int] = {}
        for term in line.split("+"):
            try:
                c, e = term.split(":")
                exps = tuple(int(x) for x in e.split(","))
                coeff = int(c)
            except ValueError as exc:
                raise ValueError(f"malformed term {term!r}") from exc
            if len(exps) != nvars:
                raise ValueError(f"term {term!r} has {len(exps)} exponents, expected {nvars}")
            d[exps] = d.get(exps, 0) + coeff
        return cls.from_dict(nvars, d)


def eval_poly(f: PolySparse, g: GroupElement) -> int:
    return f.eval(g)


@dataclass(frozen=True)
class Variety:
    """Common zero set of a list of polynomials."""

    polys: tuple[PolySparse, ...]

    def __init__(self, polys: Iterable[PolySparse]):
        object.__setattr__(self, "polys", tuple(polys))
        if len({f.nvars for f in self.polys}) > 1:
            raise ValueError("all polynomials must share the same variables")

    @property
    def nvars(self) -> int | None:
        return self.polys[0].nvars if self.polys else None

    def contains_batch(self, mats: np.ndarray, p: int) -> np.ndarray:
        xs = mats.reshape(len(mats), -1)
        mask = np.ones(len(xs), dtype=bool)
        for f in self.polys:
            if f.nvars != xs.shape[1]:
                raise ValueError("arity mismatch")
            mask &= f.eval_batch(xs, p) == 0
        return mask

    def contains(self, g: GroupElement) -> bool:
        return bool(self.contains_batch(g.array[None], g.params.p)[0])

    def to_text(self) -> str:
        return "".join(f.to_line() + "\n" for f in self.polys)

    @classmethod
    def from_text(cls, text: str, nvars: int) -> "Variety":
        return cls(PolySparse.from_line(ln, nvars) for ln in text.splitlines() if ln.strip())


# ---------------------------------------------------------------------------
# symbolic invariants


def _entry_vars(n: int) -> list[list[PolySparse]]:
    m = n * n
    return [[PolySparse.var(m, i * n + j) for j in range(n)] for i in range(n)]


@lru_cache(maxsize=None)
def det_poly(n: int) -> PolySparse:
    x = _entry_vars(n)
    if n == 2:
        return x[0][0] * x[1][1] - x[0][1] * x[1][0]
    return (
        x[0][0] * (x[1][1] * x[2][2] - x[1][2] * x[2][1])
        - x[0][1] * (x[1][0] * x[2][2] - x[1][2] * x[2][0])
        + x[0][2] * (x[1][0] * x[2][1] - x[1][1] * x[2][0])
    )


@lru_cache(maxsize=None)
def disc_poly(n: int) -> PolySparse:
    """Discriminant of the characteristic polynomial, valid on det = 1."""
    x = _entry_vars(n)
    tr = sum((x[i][i] for i in range(n)), PolySparse.const(n * n, 0))
    if n == 2:
        return tr * tr - 4
    s2 = (
        x[0][0] * x[1][1] - x[0][1] * x[1][0]
        + x[0][0] * x[2][2] - x[0][2] * x[2][0]
        + x[1][1] * x[2][2] - x[1][2] * x[2][1]
    )
    b, c = -tr, s2
    return b * b * c * c - 4 * c * c * c + 4 * b * b * b - 18 * b * c - 27


def disc_variety(n: int) -> Variety:
    return Variety([disc_poly(n)])


# ---------------------------------------------------------------------------
# escape


class EscapeExhausted(RuntimeError):
    pass


@dataclass
class EscapeResult:
    g: GroupElement
    m: int


def escape(A: ElementSet, V: Variety, x: GroupElement, m_max: int = 12, cap: int | None = None) -> EscapeResult:
    """First ``g`` (by radius, then canonical order) in ``A_m`` with ``g x`` off ``V``."""
    if m_max < 0:
        raise ValueError("m_max must be non-negative")
    if x.params != A.params:
        raise ValueError("x and A have different parameters")
    params = A.params
    p = params.p
    gens = A.symmetric(with_identity=True).mats
    for m, layer in enumerate(bfs_layers(params.identity.array[None], gens, params, max_radius=m_max, cap=cap)):
        moved = batch_mul(layer, x.array[None], p)
        off = ~V.contains_batch(moved, p)
        if off.any():
            g = layer[int(np.argmax(off))]
            return EscapeResult(GroupElement(tuple(g.ravel().tolist()), params), m)
    raise EscapeExhausted(f"every element of A_{m_max} keeps x on the variety")


def escape_regss(A: ElementSet, g0: GroupElement, m_max: int = 12) -> EscapeResult:
    """``h`` in ``A_m`` with ``h g0`` regular semisimple."""
    return escape(A, disc_variety(A.params.n), g0, m_max)
