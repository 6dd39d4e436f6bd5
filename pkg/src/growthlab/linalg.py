"""Row reduction and kernels over F_p (small dense matrices)."""
from __future__ import annotations

import numpy as np


def rref(M, p: int) -> tuple[np.ndarray, list[int]]:
    A = np.array(M, dtype=np.int64) % p
    rows, cols = A.shape
    piv = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(A[r:, c])
        if len(nz) == 0:
            continue
        k = r + nz[0]
        A[[r, k]] = A[[k, r]]
        A[r] = A[r] * pow(int(A[r, c]), -1, p) % p
        for i in range(rows):
            if i != r and A[i, c]:
                A[i] = (A[i] - A[i, c] * A[r]) % p
        piv.append(c)
        r += 1
    return A, piv


def rank(M, p: int) -> int:
    return len(rref(M, p)[1])


def nullspace(M, p: int) -> np.ndarray:
    """Basis (as rows) of ``{v : M v = 0}``."""
    M = np.atleast_2d(np.asarray(M, dtype=np.int64))
    cols = M.shape[1]
    R, piv = rref(M, p)
    free = [c for c in range(cols) if c not in piv]
    basis = []
    for f in free:
        v = np.zeros(cols, dtype=np.int64)
        v[f] = 1
        for i, c in enumerate(piv):
            v[c] = -R[i, f] % p
        basis.append(v)
    return np.array(basis, dtype=np.int64).reshape(len(basis), cols)


def solve(M, b, p: int) -> np.ndarray | None:
    """One solution of ``M v = b`` (free variables set to 0), or None."""
    M = np.atleast_2d(np.asarray(M, dtype=np.int64))
    aug = np.concatenate([M, np.asarray(b, dtype=np.int64).reshape(-1, 1)], axis=1)
    R, piv = rref(aug, p)
    cols = M.shape[1]
    if cols in piv:
        return None
    v = np.zeros(cols, dtype=np.int64)
    for i, c in enumerate(piv):
        v[c] = R[i, cols]
    return v


def det(M, p: int) -> int:
    A = np.array(M, dtype=np.int64) % p
    n = A.shape[0]
    d = 1
    for c in range(n):
        nz = np.flatnonzero(A[c:, c])
        if len(nz) == 0:
            return 0
        k = c + nz[0]
        if k != c:
            A[[c, k]] = A[[k, c]]
            d = -d
        d = d * int(A[c, c]) % p
        inv = pow(int(A[c, c]), -1, p)
        for i in range(c + 1, n):
            if A[i, c]:
                A[i] = (A[i] - A[i, c] * inv % p * A[c]) % p
    return d % p


def intersect_kernel(basis: np.ndarray, M, p: int) -> np.ndarray:
    """Basis of ``span(basis) ∩ ker(M)``; ``basis`` holds row vectors."""
    if len(basis) == 0:
        return basis
    coeffs = nullspace(np.mod(np.asarray(M) @ basis.T, p), p)
    if len(coeffs) == 0:
        return basis[:0]
    out = np.mod(coeffs @ basis, p)
    R, piv = rref(out, p)
    return R[: len(piv)]


def eigenvalues(M, p: int) -> list[int]:
    """Eigenvalues of ``M`` lying in F_p (roots of the characteristic polynomial)."""
    n = len(M)
    eye = np.eye(n, dtype=np.int64)
    return [lam for lam in range(p) if det(np.asarray(M) - lam * eye, p) == 0]
