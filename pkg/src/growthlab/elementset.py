"""Deduplicated sets of group elements and the product/BFS engine."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

from .field import (
    Codec,
    FieldParams,
    GroupElement,
    ParamsMismatch,
    as_batch,
    batch_det,
    batch_inv,
    outer_mul,
)

DEFAULT_CAP_CODES = 10**8
# rows of products materialised at once
CHUNK_ROWS = 1 << 20


class CapExceeded(RuntimeError):
    """A set grew beyond the configured code cap."""

    def __init__(self, msg: str, partial: "ElementSet | None" = None):
        super().__init__(msg)
        self.partial = partial


def default_cap() -> int:
    env = os.environ.get("GROWTHLAB_CAP_BYTES")
    if env:
        return max(1, int(env) // 8)
    return DEFAULT_CAP_CODES


def _decode_keys(keys: np.ndarray, params: FieldParams) -> np.ndarray:
    """Inverse of :meth:`Codec.keys` for single-word codecs."""
    p, n = params.p, params.n
    out = np.empty((len(keys), n * n), dtype=np.int64)
    rest = keys.astype(np.uint64)
    pp = np.uint64(p)
    for i in range(n * n):
        out[:, i] = (rest % pp).astype(np.int64)
        rest = rest // pp
    return out.reshape(-1, n, n)


class ElementSet:
    """Immutable set of elements of SL_n(F_p), stored in canonical code order."""

    __slots__ = ("params", "_mats", "_keys")

    def __init__(self, params: FieldParams, mats: np.ndarray, *, _canonical: bool = False):
        self.params = params
        mats = as_batch(mats, params) if len(mats) else np.empty((0, params.n, params.n), np.int64)
        if not _canonical:
            if len(mats) and np.any(batch_det(mats, params.p) != 1):
                raise ValueError("every element must have determinant 1")
            mats = params.codec.unique(mats)
        mats.setflags(write=False)
        self._mats = mats
        self._keys = None

    # construction ---------------------------------------------------------
    @classmethod
    def from_elements(cls, elems: Iterable[GroupElement], params: FieldParams | None = None) -> "ElementSet":
        elems = list(elems)
        if params is None:
            if not elems:
                raise ValueError("params required for an empty set")
            params = elems[0].params
        for e in elems:
            if e.params != params:
                raise ParamsMismatch(f"{e.params} vs {params}")
        mats = np.array([e.array for e in elems], dtype=np.int64).reshape(-1, params.n, params.n)
        return cls(params, mats)

    @classmethod
    def from_codes(cls, codes: Iterable[int], params: FieldParams) -> "ElementSet":
        codec = params.codec
        mats = np.array([codec.decode(c) for c in codes], dtype=np.int64).reshape(-1, params.n, params.n)
        return cls(params, mats)

    @classmethod
    def from_keys(cls, keys: np.ndarray, params: FieldParams) -> "ElementSet":
        """Build from sorted unique single-word keys."""
        s = cls.__new__(cls)
        s.params = params
        mats = _decode_keys(keys, params)
        mats.setflags(write=False)
        s._mats = mats
        s._keys = keys
        return s

    @classmethod
    def identity(cls, params: FieldParams) -> "ElementSet":
        return cls(params, params.identity.array[None])

    # access -----------------------------------------------------------------
    @property
    def mats(self) -> np.ndarray:
        return self._mats

    @property
    def keys(self) -> np.ndarray:
        if self._keys is None:
            self._keys = self.params.codec.keys(self._mats)
        return self._keys

    def codes(self) -> list[int]:
        return self.params.codec.codes(self._mats)

    def elements(self) -> list[GroupElement]:
        return [GroupElement(tuple(m.ravel().tolist()), self.params) for m in self._mats]

    def __len__(self) -> int:
        return len(self._mats)

    def __iter__(self) -> Iterator[GroupElement]:
        return iter(self.elements())

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ElementSet)
            and self.params == other.params
            and len(self) == len(other)
            and np.array_equal(self._mats, other._mats)
        )

    def __hash__(self):
        return hash((self.params, len(self), self._mats.tobytes()))

    def __repr__(self):
        return f"ElementSet(n={self.params.n}, p={self.params.p}, size={len(self)})"

    def contains_mask(self, mats: np.ndarray) -> np.ndarray:
        codec = self.params.codec
        if len(self) == 0:
            return np.zeros(len(mats), dtype=bool)
        q = codec.keys(mats)
        if codec.single:
            pos = np.searchsorted(self.keys, q)
            pos = np.minimum(pos, len(self) - 1)
            return self.keys[pos] == q
        mine = {tuple(r) for r in self.keys.tolist()}
        return np.array([tuple(r) in mine for r in q.tolist()], dtype=bool)

    def __contains__(self, g: GroupElement) -> bool:
        return bool(self.contains_mask(g.array[None])[0])

    def issubset(self, other: "ElementSet") -> bool:
        return bool(np.all(other.contains_mask(self._mats)))

    # algebra ----------------------------------------------------------------
    def _check(self, other: "ElementSet"):
        if self.params != other.params:
            raise ParamsMismatch(f"{self.params} vs {other.params}")

    def inverse(self) -> "ElementSet":
        return ElementSet(self.params, batch_inv(self._mats, self.params.p), _canonical=False)

    def union(self, *others: "ElementSet") -> "ElementSet":
        for o in others:
            self._check(o)
        mats = np.concatenate([self._mats] + [o._mats for o in others])
        return ElementSet(self.params, mats)

    def intersection(self, other: "ElementSet") -> "ElementSet":
        self._check(other)
        return self.filter(other.contains_mask(self._mats))

    def difference(self, other: "ElementSet") -> "ElementSet":
        self._check(other)
        return self.filter(~other.contains_mask(self._mats))

    def filter(self, mask: np.ndarray) -> "ElementSet":
        s = ElementSet.__new__(ElementSet)
        s.params = self.params
        m = self._mats[mask]
        m.setflags(write=False)
        s._mats = m
        s._keys = None if self._keys is None else self._keys[mask]
        return s

    def symmetric(self, with_identity: bool = True) -> "ElementSet":
        """``A ∪ A⁻¹`` (plus the identity by default)."""
        parts = [self._mats, batch_inv(self._mats, self.params.p)]
        if with_identity:
            parts.append(self.params.identity.array[None])
        return ElementSet(self.params, np.concatenate(parts))

    def conjugate(self, g: GroupElement) -> "ElementSet":
        """``g A g⁻¹``."""
        p = self.params.p
        gi = batch_inv(g.array[None], p)[0]
        return ElementSet(self.params, np.mod(np.mod(g.array @ self._mats, p) @ gi, p))

    def first(self) -> GroupElement:
        return GroupElement(tuple(self._mats[0].ravel().tolist()), self.params)

    # serialization ----------------------------------------------------------
    def to_text(self) -> str:
        lines = [f"{self.params.n} {self.params.p} {len(self)}"]
        lines.extend(str(c) for c in self.codes())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ElementSet":
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty element-set file")
        try:
            n, p, count = (int(x) for x in lines[0].split())
        except ValueError as exc:
            raise ValueError(f"bad header line {lines[0]!r}; expected 'n p count'") from exc
        body = lines[1:]
        if len(body) != count:
            raise ValueError(f"header declares {count} codes, file has {len(body)}")
        params = FieldParams(p=p, n=n)
        s = cls.from_codes((int(x) for x in body), params)
        if len(s) != count:
            raise ValueError("duplicate codes in element-set file")
        return s

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path: str) -> "ElementSet":
        with open(path) as fh:
            return cls.from_text(fh.read())


# ---------------------------------------------------------------------------
# key accumulation


class KeyAccumulator:
    """Union of key batches; exact for both single- and multi-word codecs."""

    def __init__(self, params: FieldParams):
        self.params = params
        self.codec = params.codec
        self._parts: list[np.ndarray] = []
        self._pending = 0
        self.size = 0

    def _dedup(self, keys: np.ndarray) -> np.ndarray:
        if self.codec.single:
            return np.unique(keys)
        return keys[self.codec.unique_index(keys)]

    def add(self, mats: np.ndarray) -> None:
        self.add_keys(self.codec.keys(mats))

    def add_keys(self, keys: np.ndarray) -> None:
        if len(keys) == 0:
            return
        keys = self._dedup(keys)
        self._parts.append(keys)
        self._pending += len(keys)
        if self._pending > 4 * max(self.size, CHUNK_ROWS) or len(self._parts) > 64:
            self._compact()

    def _compact(self) -> None:
        if len(self._parts) > 1:
            self._parts = [self._dedup(np.concatenate(self._parts))]
        self.size = len(self._parts[0]) if self._parts else 0
        self._pending = 0

    def current_size(self) -> int:
        self._compact()
        return self.size

    def result(self) -> ElementSet:
        self._compact()
        if self.codec.single:
            keys = self._parts[0] if self._parts else np.empty(0, np.uint64)
            return ElementSet.from_keys(keys, self.params)
        if not self._parts:
            return ElementSet(self.params, np.empty((0, self.params.n, self.params.n), np.int64), _canonical=True)
        keys = self._parts[0]
        keys = keys[self.codec.canonical_order(keys)]
        return ElementSet(self.params, self.codec.decode_keys(keys), _canonical=True)


def _chunks(k: int, width: int) -> list[tuple[int, int]]:
    step = max(1, CHUNK_ROWS // max(1, width))
    return [(i, min(i + step, k)) for i in range(0, k, step)]


def product(
    A: ElementSet,
    B: ElementSet,
    *,
    cap: int | None = None,
    ambient_order: int | None = None,
    lower_bound_ok: bool = False,
    workers: int = 1,
) -> ElementSet:
    """Exact product set ``{a b : a in A, b in B}``.

    The larger operand is split into chunks; partial results are merged as a
    set union, so contents do not depend on chunking or on ``workers``.  If
    ``ambient_order`` is given, work stops once the whole group is reached.
    With ``lower_bound_ok`` a cap overflow returns the partial set inside the
    raised :class:`CapExceeded` instead of a bare error.
    """
    if A.params != B.params:
        raise ParamsMismatch(f"{A.params} vs {B.params}")
    params = A.params
    cap = default_cap() if cap is None else cap
    acc = KeyAccumulator(params)
    codec = params.codec
    if len(A) == 0 or len(B) == 0:
        return acc.result()
    a, b = A.mats, B.mats
    split_left = len(a) >= len(b)
    big, small = (a, b) if split_left else (b, a)
    spans = _chunks(len(big), len(small))

    def work(span):
        lo, hi = span
        if split_left:
            return codec.outer_keys(big[lo:hi], small)
        return codec.outer_keys(small, big[lo:hi])

    def consume(batch):
        acc.add_keys(batch)
        if ambient_order is not None or len(acc._parts) > 8:
            size = acc.current_size()
            if size > cap:
                err = CapExceeded(f"product exceeded cap of {cap} codes")
                if lower_bound_ok:
                    err.partial = acc.result()
                raise err
            if ambient_order is not None and size >= ambient_order:
                return True
        return False

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for i in range(0, len(spans), workers):
                done = False
                for batch in pool.map(work, spans[i : i + workers]):
                    done = consume(batch) or done
                if done:
                    break
    else:
        for span in spans:
            if consume(work(span)):
                break
    if acc.current_size() > cap:
        err = CapExceeded(f"product exceeded cap of {cap} codes")
        if lower_bound_ok:
            err.partial = acc.result()
        raise err
    return acc.result()


# ---------------------------------------------------------------------------
# visited sets and BFS


class Visited:
    """Membership structure for BFS: a dense bitmap when the rank range is
    small, otherwise a sorted key array (or a Python set for wide codes)."""

    def __init__(self, params: FieldParams):
        self.codec = params.codec
        self.count = 0
        if self.codec.rank_range is not None:
            self.mode = "bitmap"
            self.bits = np.zeros(self.codec.rank_range, dtype=bool)
        elif self.codec.single:
            self.mode = "sorted"
            self.sorted = np.empty(0, dtype=np.uint64)
        else:
            self.mode = "pyset"
            self.items: set[tuple] = set()

    def add_new(self, mats: np.ndarray) -> np.ndarray:
        """Insert ``mats``; return the (deduplicated) rows that were not present."""
        if len(mats) == 0:
            return mats
        if self.mode == "bitmap":
            r = self.codec.ranks(mats)
            r_u, idx = np.unique(r, return_index=True)
            fresh = ~self.bits[r_u]
            self.bits[r_u[fresh]] = True
            out = mats[idx[fresh]]
        elif self.mode == "sorted":
            k = self.codec.keys(mats)
            k_u, idx = np.unique(k, return_index=True)
            if len(self.sorted):
                pos = np.minimum(np.searchsorted(self.sorted, k_u), len(self.sorted) - 1)
                fresh = self.sorted[pos] != k_u
            else:
                fresh = np.ones(len(k_u), dtype=bool)
            merged = np.concatenate([self.sorted, k_u[fresh]])
            merged.sort(kind="stable")
            self.sorted = merged
            out = mats[idx[fresh]]
        else:
            k = self.codec.keys(mats).tolist()
            keep = []
            for i, row in enumerate(k):
                t = tuple(row)
                if t not in self.items:
                    self.items.add(t)
                    keep.append(i)
            out = mats[np.array(keep, dtype=np.int64)] if keep else mats[:0]
        self.count += len(out)
        return out


def bfs_layers(
    start: np.ndarray,
    gens: np.ndarray,
    params: FieldParams,
    *,
    max_radius: int | None = None,
    cap: int | None = None,
    side: str = "left",
) -> Iterator[np.ndarray]:
    """Yield BFS layers: layer 0 is ``start`` (deduplicated); layer ``r+1`` is
    the set of new elements ``s x`` (``side='left'``) or ``x s`` for ``x`` in
    layer ``r`` and ``s`` in ``gens``.  Layers come out in canonical order."""
    cap = default_cap() if cap is None else cap
    p = params.p
    codec = params.codec
    visited = Visited(params)
    layer = codec.unique(visited.add_new(start))
    yield layer
    r = 0
    while len(layer) and (max_radius is None or r < max_radius):
        parts = []
        for lo, hi in _chunks(len(layer), len(gens)):
            if side == "left":
                cand = outer_mul(gens, layer[lo:hi], p)
            else:
                cand = outer_mul(layer[lo:hi], gens, p)
            parts.append(visited.add_new(cand))
            if visited.count > cap:
                raise CapExceeded(f"BFS exceeded cap of {cap} elements")
        layer = codec.unique(np.concatenate(parts)) if parts else layer[:0]
        r += 1
        if len(layer):
            yield layer


def closure(A: ElementSet, cap: int | None = None) -> ElementSet:
    """Subgroup generated by ``A`` (the identity alone when ``A`` is empty)."""
    params = A.params
    gens = A.mats if len(A) else params.identity.array[None]
    acc = [l for l in bfs_layers(params.identity.array[None], gens, params, cap=cap)]
    return ElementSet(params, np.concatenate(acc), _canonical=False)


def from_matrices(rows: Sequence, params: FieldParams) -> ElementSet:
    return ElementSet(params, np.asarray(rows, dtype=np.int64).reshape(-1, params.n, params.n))
