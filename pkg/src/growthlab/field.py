"""Exact arithmetic in SL_n(F_p) for n in {2, 3}.

Single elements are immutable :class:`GroupElement` values.  Bulk work goes
through the ``batch_*`` helpers, which act on integer arrays of shape
``(k, n, n)`` holding residues in ``[0, p)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

#: largest admissible prime per dimension (64-bit codes for n=2, 128-bit for n=3)
MAX_PRIME = {2: 65521, 3: 16381}

# float64 matmul is exact while n * (p - 1)**2 < 2**53
_FLOAT_EXACT = 2**53
_FLOAT32_EXACT = 2**20  # keeps the float32 reduction error below 1/(4p)


class ParamsMismatch(ValueError):
    pass


class EncodingOverflow(ValueError):
    pass


class NotInGroup(ValueError):
    """Raised when a matrix does not have determinant 1."""


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    r = math.isqrt(p)
    return all(p % d for d in range(3, r + 1, 2))


def inverse_mod(a: int, p: int) -> int:
    a %= p
    if a == 0:
        raise ZeroDivisionError("0 has no inverse mod p")
    return pow(a, -1, p)


def multiplicative_order(x: int, p: int) -> int:
    x %= p
    if x == 0:
        raise ValueError("0 is not a unit")
    k, y = 1, x
    while y != 1:
        y = y * x % p
        k += 1
    return k


def least_primitive_root(p: int) -> int:
    for x in range(1, p):
        if multiplicative_order(x, p) == p - 1:
            return x
    raise ValueError(f"no primitive root mod {p}")


def sqrt_mod(a: int, p: int) -> int | None:
    """Smaller square root of ``a`` mod ``p`` in ``[0, p)``, or None."""
    a %= p
    if a == 0:
        return 0
    if p == 2:
        return a
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    for r in range(1, (p + 1) // 2 + 1):
        if r * r % p == a:
            return min(r, p - r)
    return None  # pragma: no cover


@dataclass(frozen=True)
class FieldParams:
    """Prime modulus ``p`` and matrix dimension ``n``."""

    p: int
    n: int

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError(f"n must be 2 or 3, got {self.n}")
        if not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p}")
        if self.p > MAX_PRIME[self.n]:
            raise EncodingOverflow(
                f"p={self.p} exceeds the encoding cap {MAX_PRIME[self.n]} for n={self.n}"
            )

    @property
    def dim(self) -> int:
        return self.n * self.n

    @property
    def group_order(self) -> int:
        p = self.p
        if self.n == 2:
            return p * (p * p - 1)
        return p**3 * (p**3 - 1) * (p * p - 1)

    @cached_property
    def identity(self) -> "GroupElement":
        return GroupElement(tuple(int(i == j) for i in range(self.n) for j in range(self.n)), self)

    @cached_property
    def codec(self) -> "Codec":
        return Codec(self.p, self.n)


# ---------------------------------------------------------------------------
# batched kernels


def as_batch(mats, params: FieldParams) -> np.ndarray:
    a = np.asarray(mats, dtype=np.int64)
    if a.ndim == 2:
        a = a.reshape(1, *a.shape)
    n = params.n
    if a.ndim != 3 or a.shape[1:] != (n, n):
        a = a.reshape(-1, n, n)
    return np.mod(a, params.p)


def batch_mul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """Pairwise products ``a[i] @ b[i]`` mod p (broadcasting allowed)."""
    return np.mod(np.matmul(a, b), p)


def _reduce(x: np.ndarray, p: int, ft=np.float64) -> np.ndarray:
    """``x mod p`` for non-negative integer-valued floats below 2^50, in place.

    Rounding ``x/p + 1/(2p)`` down stays exact because the fractional part of
    ``x/p`` is a multiple of ``1/p`` and the float error is far below ``1/(2p)``.
    """
    q = x * ft(1.0 / p)
    q += ft(0.5 / p)
    np.floor(q, out=q)
    q *= ft(p)
    x -= q
    return x


def outer_mul(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    """All products ``a[i] @ b[j]``, flattened with ``i`` as the outer index."""
    ka, n, _ = a.shape
    kb = b.shape[0]
    if ka == 0 or kb == 0:
        return np.empty((0, n, n), dtype=np.int64)
    if n * (p - 1) ** 2 < _FLOAT_EXACT:
        left = a.reshape(ka * n, n).astype(np.float64)
        right = b.transpose(1, 0, 2).reshape(n, kb * n).astype(np.float64)
        prod = _reduce(left @ right, p).astype(np.int64)
    else:  # pragma: no cover - unreachable under MAX_PRIME
        prod = np.mod(a.reshape(ka * n, n) @ b.transpose(1, 0, 2).reshape(n, kb * n), p)
    return prod.reshape(ka, n, kb, n).transpose(0, 2, 1, 3).reshape(ka * kb, n, n)


def batch_det(a: np.ndarray, p: int) -> np.ndarray:
    if a.shape[1] == 2:
        return np.mod(a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0], p)
    m = np.mod
    c0 = m(a[:, 1, 1] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 1], p)
    c1 = m(a[:, 1, 0] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 0], p)
    c2 = m(a[:, 1, 0] * a[:, 2, 1] - a[:, 1, 1] * a[:, 2, 0], p)
    return m(a[:, 0, 0] * c0 - a[:, 0, 1] * c1 + a[:, 0, 2] * c2, p)


def batch_inv(a: np.ndarray, p: int) -> np.ndarray:
    """Inverse via the adjugate; valid because every determinant is 1."""
    if a.shape[1] == 2:
        out = np.empty_like(a)
        out[:, 0, 0] = a[:, 1, 1]
        out[:, 1, 1] = a[:, 0, 0]
        out[:, 0, 1] = -a[:, 0, 1]
        out[:, 1, 0] = -a[:, 1, 0]
        return np.mod(out, p)
    out = np.empty_like(a)
    for i in range(3):
        for j in range(3):
            r = [x for x in range(3) if x != j]
            c = [x for x in range(3) if x != i]
            minor = a[:, r[0], c[0]] * a[:, r[1], c[1]] - a[:, r[0], c[1]] * a[:, r[1], c[0]]
            out[:, i, j] = minor if (i + j) % 2 == 0 else -minor
    return np.mod(out, p)


def batch_trace(a: np.ndarray, p: int) -> np.ndarray:
    return np.mod(np.trace(a, axis1=1, axis2=2), p)


def batch_kappa(a: np.ndarray, p: int) -> np.ndarray:
    """Characteristic-polynomial coefficients, shape ``(k, n - 1)``."""
    tr = batch_trace(a, p)
    if a.shape[1] == 2:
        return np.mod(-tr, p)[:, None]
    # tr(g^-1) = sum of principal 2x2 minors when det g = 1
    s2 = (
        a[:, 0, 0] * a[:, 1, 1] - a[:, 0, 1] * a[:, 1, 0]
        + a[:, 0, 0] * a[:, 2, 2] - a[:, 0, 2] * a[:, 2, 0]
        + a[:, 1, 1] * a[:, 2, 2] - a[:, 1, 2] * a[:, 2, 1]
    )
    return np.stack([np.mod(-tr, p), np.mod(s2, p)], axis=1)


def discriminant_from_kappa(kap: np.ndarray, p: int) -> np.ndarray:
    """Discriminant of the characteristic polynomial, from its coefficients."""
    kap = np.asarray(kap, dtype=np.int64)
    if kap.shape[-1] == 1:
        b = kap[..., 0]
        return np.mod(b * b - 4, p)
    # lambda^3 + b lambda^2 + c lambda - 1
    b = kap[..., 0]
    c = kap[..., 1]
    m = np.mod
    b2 = m(b * b, p)
    c2 = m(c * c, p)
    return m(m(b2 * c2, p) - 4 * m(c2 * c, p) + 4 * m(b2 * b, p) - 18 * m(b * c, p) - 27, p)


def batch_is_regular_semisimple(a: np.ndarray, p: int) -> np.ndarray:
    return discriminant_from_kappa(batch_kappa(a, p), p) != 0


def batch_commute(a: np.ndarray, g: np.ndarray, p: int) -> np.ndarray:
    """Mask of rows of ``a`` commuting with the single matrix ``g``."""
    return np.all(batch_mul(a, g, p) == batch_mul(g, a, p), axis=(1, 2))


# ---------------------------------------------------------------------------
# canonical codes


class Codec:
    """Canonical code ``sum_i entry_i * p**i`` over row-major entries.

    When ``p**(n*n)`` fits in 64 bits the code itself is the sort key.
    Otherwise the code is split into int64 limbs (most significant first),
    dedup runs on a 64-bit mix of the limbs and every hash tie is verified
    limb by limb, so results stay exact.
    """

    def __init__(self, p: int, n: int):
        self.p, self.n = p, n
        m = n * n
        self.m = m
        self.single = p**m <= 2**64
        if self.single:
            self.limbs = [list(range(m))]
        else:
            w = 1
            while p ** (w + 1) < 2**63:
                w += 1
            groups = [list(range(i, min(i + w, m))) for i in range(0, m, w)]
            self.limbs = groups[::-1]
        self._weights = [
            np.array([p ** (i - grp[0]) for i in grp], dtype=np.uint64 if self.single else np.int64)
            for grp in self.limbs
        ]
        # dense rank for bitmap visited-sets
        if n == 2:
            self.rank_range = p**3 if p**3 <= 2**27 else None
        else:
            self.rank_range = p**9 if p**9 <= 2**27 else None

    def keys(self, mats: np.ndarray) -> np.ndarray:
        flat = mats.reshape(len(mats), self.m)
        return self._keys_from_columns(lambda i: flat[:, i], len(flat))

    def _keys_from_columns(self, col, k: int) -> np.ndarray:
        """Keys from a callable giving entry column ``i`` (values in ``[0, p)``)."""
        dtype = np.uint64 if self.single else np.int64
        out = np.empty((k, len(self.limbs)), dtype=dtype)
        for j, (grp, w) in enumerate(zip(self.limbs, self._weights)):
            acc = np.zeros(k, dtype=dtype)
            for i, wi in zip(grp, w):
                acc += col(i).astype(dtype) * wi
            out[:, j] = acc
        return out[:, 0] if self.single else out

    def outer_keys(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Keys of all products ``a[i] @ b[j]`` (same order as :func:`outer_mul`)."""
        ka, n, _ = a.shape
        kb = b.shape[0]
        p = self.p
        if ka == 0 or kb == 0 or n * (p - 1) ** 2 >= _FLOAT_EXACT:
            return self.keys(outer_mul(a, b, p))
        # float32 halves memory traffic and stays exact for small entries
        ft = np.float32 if n * (p - 1) ** 2 < _FLOAT32_EXACT else np.float64
        rows = [np.ascontiguousarray(a[:, r, :], dtype=ft) for r in range(n)]
        cols = [np.ascontiguousarray(b[:, :, c].T, dtype=ft) for c in range(n)]

        def col(i):
            r, c = divmod(i, n)
            return _reduce(rows[r] @ cols[c], p, ft).ravel()

        dtype = np.uint64 if self.single else np.int64
        k = ka * kb
        out = np.empty((k, len(self.limbs)), dtype=dtype)
        for j, grp in enumerate(self.limbs):
            # Horner in float64 over runs of digits that fit in 53 bits
            acc = np.zeros(k, dtype=dtype)
            run = max(1, int(53 / math.log2(p)) - 1)
            top = len(grp)
            for hi in range(top, 0, -run):
                lo = max(0, hi - run)
                part = np.zeros(k, dtype=np.float64)
                for i in reversed(grp[lo:hi]):
                    part *= p
                    part += col(i)
                acc += part.astype(dtype) * dtype(p**lo)
            out[:, j] = acc
        return out[:, 0] if self.single else out

    def decode_keys(self, keys: np.ndarray) -> np.ndarray:
        """Matrices from keys (inverse of :meth:`keys`)."""
        k = len(keys)
        flat = np.empty((k, self.m), dtype=np.int64)
        cols = keys[:, None] if self.single else keys
        for j, grp in enumerate(self.limbs):
            rest = cols[:, j].astype(np.uint64)
            pp = np.uint64(self.p)
            for i in grp:
                flat[:, i] = (rest % pp).astype(np.int64)
                rest = rest // pp
        return flat.reshape(k, self.n, self.n)

    def hashes(self, keys: np.ndarray) -> np.ndarray:
        if self.single:
            return keys
        h = np.zeros(len(keys), dtype=np.uint64)
        mult = np.uint64(0x9E3779B97F4A7C15)
        for j in range(keys.shape[1]):
            h = (h ^ keys[:, j].astype(np.uint64)) * mult
            h ^= h >> np.uint64(29)
        return h

    def ranks(self, mats: np.ndarray) -> np.ndarray:
        """Injective small-range index used by bitmap visited-sets."""
        p = self.p
        if self.n == 3:
            return self.keys(mats).astype(np.int64)
        a, b, c, d = (mats[:, 0, 0], mats[:, 0, 1], mats[:, 1, 0], mats[:, 1, 1])
        # a != 0 fixes d; a == 0 forces c = -1/b, leaving (b, d) free
        return np.where(a != 0, (a * p + b) * p + c, b * p + d)

    def canonical_order(self, keys: np.ndarray) -> np.ndarray:
        if self.single:
            return np.argsort(keys, kind="stable")
        return np.lexsort(tuple(keys[:, j] for j in range(keys.shape[1] - 1, -1, -1)))

    def unique(self, mats: np.ndarray) -> np.ndarray:
        """Deduplicate and sort into canonical order."""
        if len(mats) == 0:
            return mats.reshape(0, self.n, self.n)
        keys = self.keys(mats)
        if self.single:
            _, idx = np.unique(keys, return_index=True)
            return mats[idx]
        idx = self.unique_index(keys)
        kept = keys[idx]
        return mats[idx[self.canonical_order(kept)]]

    def unique_index(self, keys: np.ndarray) -> np.ndarray:
        """Indices of one representative per distinct key (arbitrary order)."""
        if self.single:
            return np.unique(keys, return_index=True)[1]
        h = self.hashes(keys)
        bits = max(1, (len(h) - 1).bit_length())
        mask = np.uint64((1 << bits) - 1)
        # sort hash prefixes with the row index packed into the low bits
        packed = np.sort((h & ~mask) | np.arange(len(h), dtype=np.uint64))
        order = (packed & mask).astype(np.int64)
        hs = packed >> np.uint64(bits)
        tie = hs[1:] == hs[:-1]
        if tie.any():
            ks = keys[order]
            same = np.all(ks[1:] == ks[:-1], axis=1)
            if np.any(tie & ~same):
                return self._unique_exact(keys)
        first = np.ones(len(order), dtype=bool)
        first[1:] = ~tie
        return order[first]

    def _unique_exact(self, keys: np.ndarray) -> np.ndarray:
        order = self.canonical_order(keys)
        ks = keys[order]
        first = np.ones(len(order), dtype=bool)
        first[1:] = np.any(ks[1:] != ks[:-1], axis=1)
        return order[first]

    def encode(self, entries: Sequence[int]) -> int:
        if len(entries) != self.m:
            raise ValueError("wrong number of entries")
        return sum(int(e) * self.p**i for i, e in enumerate(entries))

    def decode(self, code: int) -> tuple[int, ...]:
        code = int(code)
        if not 0 <= code < self.p**self.m:
            raise EncodingOverflow(f"code {code} out of range")
        out = []
        for _ in range(self.m):
            code, r = divmod(code, self.p)
            out.append(r)
        return tuple(out)

    def codes(self, mats: np.ndarray) -> list[int]:
        flat = mats.reshape(len(mats), self.m).tolist()
        pw = [self.p**i for i in range(self.m)]
        return [sum(e * w for e, w in zip(row, pw)) for row in flat]


# ---------------------------------------------------------------------------
# single elements


@dataclass(frozen=True)
class GroupElement:
    """An ``n x n`` matrix of determinant 1 over F_p, entries row-major."""

    entries: tuple[int, ...]
    params: FieldParams

    def __post_init__(self):
        p, n = self.params.p, self.params.n
        ent = tuple(int(e) % p for e in self.entries)
        if len(ent) != n * n:
            raise ValueError(f"expected {n * n} entries, got {len(ent)}")
        object.__setattr__(self, "entries", ent)
        if int(batch_det(self.array[None], p)[0]) != 1:
            raise NotInGroup(f"determinant of {self.rows()} is not 1 mod {p}")

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]], params: FieldParams) -> "GroupElement":
        return cls(tuple(int(x) for row in rows for x in row), params)

    @classmethod
    def diag(cls, values: Sequence[int], params: FieldParams) -> "GroupElement":
        n = params.n
        return cls(tuple(values[i] if i == j else 0 for i in range(n) for j in range(n)), params)

    @property
    def array(self) -> np.ndarray:
        n = self.params.n
        return np.array(self.entries, dtype=np.int64).reshape(n, n)

    def rows(self) -> list[list[int]]:
        return self.array.tolist()

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def __repr__(self):
        return f"GroupElement({self.rows()}, p={self.params.p})"


def _check_same(a: GroupElement, b: GroupElement):
    if a.params != b.params:
        raise ParamsMismatch(f"{a.params} vs {b.params}")


def mul(a: GroupElement, b: GroupElement) -> GroupElement:
    _check_same(a, b)
    p = a.params.p
    return GroupElement(tuple(np.mod(a.array @ b.array, p).ravel().tolist()), a.params)


def inv(a: GroupElement) -> GroupElement:
    return GroupElement(tuple(batch_inv(a.array[None], a.params.p)[0].ravel().tolist()), a.params)


def power(a: GroupElement, k: int) -> GroupElement:
    if k < 0:
        a, k = inv(a), -k
    out = a.params.identity
    base = a
    while k:
        if k & 1:
            out = mul(out, base)
        base = mul(base, base)
        k >>= 1
    return out


def kappa(a: GroupElement) -> tuple[int, ...]:
    """``(a_{n-1}, ..., a_1)`` of ``det(lambda I - g)``; conjugation invariant."""
    return tuple(int(x) for x in batch_kappa(a.array[None], a.params.p)[0])


def discriminant(a: GroupElement) -> int:
    return int(discriminant_from_kappa(np.array(kappa(a)), a.params.p))


def is_regular_semisimple(a: GroupElement) -> bool:
    return discriminant(a) != 0


def encode(a: GroupElement) -> int:
    return a.params.codec.encode(a.entries)


def decode(code: int, params: FieldParams) -> GroupElement:
    return GroupElement(params.codec.decode(code), params)


def trace(a: GroupElement) -> int:
    return int(sum(a.entries[i * a.params.n + i] for i in range(a.params.n)) % a.params.p)


def commute(a: GroupElement, b: GroupElement) -> bool:
    return mul(a, b) == mul(b, a)


# ---------------------------------------------------------------------------
# randomness


def make_rng(seed: int | None) -> np.random.Generator:
    """Counter-based generator (Philox) so sampled sets are reproducible."""
    return np.random.Generator(np.random.Philox(seed))


RNG_ALGORITHM = "numpy.random.Philox"


def random_matrices(params: FieldParams, k: int, rng: np.random.Generator) -> np.ndarray:
    """``k`` independent uniform elements of SL_n(F_p), by rejection on the determinant."""
    p, n = params.p, params.n
    out = []
    have = 0
    while have < k:
        batch = rng.integers(0, p, size=(max(2 * (k - have), 16), n, n), dtype=np.int64)
        det = batch_det(batch, p)
        good = batch[det != 0]
        dg = det[det != 0]
        # rescale the first row by det^-1
        inv_d = np.array([pow(int(d), -1, p) for d in dg], dtype=np.int64)
        good[:, 0, :] = np.mod(good[:, 0, :] * inv_d[:, None], p)
        out.append(good)
        have += len(good)
    return np.concatenate(out)[:k]


def random_element(params: FieldParams, rng: np.random.Generator) -> GroupElement:
    return GroupElement(tuple(random_matrices(params, 1, rng)[0].ravel().tolist()), params)


@lru_cache(maxsize=None)
def all_matrices(params: FieldParams) -> np.ndarray:
    """Every element of SL_n(F_p), canonical order; only for small groups."""
    p, n = params.p, params.n
    if params.group_order > 2_000_000:
        raise ValueError(f"|SL_{n}(F_{p})| too large to enumerate")
    if n == 2:
        r = np.arange(p)
        a, b, c = np.meshgrid(r, r, r, indexing="ij")
        a, b, c = a.ravel(), b.ravel(), c.ravel()
        parts = []
        nz = a != 0
        ainv = np.array([0] + [pow(int(x), -1, p) for x in range(1, p)], dtype=np.int64)
        d = np.mod((1 + b[nz] * c[nz]) * ainv[a[nz]], p)
        parts.append(np.stack([a[nz], b[nz], c[nz], d], axis=1))
        # a == 0: b c = -1
        bb = np.repeat(np.arange(1, p), p)
        dd = np.tile(np.arange(p), p - 1)
        cc = np.mod(-ainv[bb], p)
        parts.append(np.stack([np.zeros_like(bb), bb, cc, dd], axis=1))
        mats = np.concatenate(parts).reshape(-1, 2, 2)
    else:
        # first two rows free (independent), third row fixed up to a plane
        r = np.arange(p)
        grid = np.stack(np.meshgrid(*([r] * 3), indexing="ij"), axis=-1).reshape(-1, 3)
        mats_l = []
        for row0 in grid[1:]:
            for row1 in grid[1:]:
                cross = np.mod(np.cross(row0, row1), p)
                if not cross.any():
                    continue
                # row2 . cross == 1
                dots = np.mod(grid @ cross, p)
                row2 = grid[dots == 1]
                m = np.empty((len(row2), 3, 3), dtype=np.int64)
                m[:, 0] = row0
                m[:, 1] = row1
                m[:, 2] = row2
                mats_l.append(m)
        mats = np.concatenate(mats_l)
    return params.codec.unique(np.mod(mats, p).astype(np.int64))
