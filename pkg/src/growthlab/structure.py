"""Subgroup structure: classifiers, unipotent subgroup types, the parabolic
decomposition and unitriangular factorisations."""
from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import linalg
from .elementset import CapExceeded, ElementSet, bfs_layers, closure
from .field import (
    FieldParams,
    GroupElement,
    batch_commute,
    batch_is_regular_semisimple,
    batch_mul,
    inv,
    make_rng,
    mul,
    sqrt_mod,
)

ABELIAN_SEARCH_LIMIT = 5000


# ---------------------------------------------------------------------------
# common eigenvectors


def common_eigenspaces(mats: np.ndarray, p: int) -> list[np.ndarray]:
    """Non-zero subspaces on which every matrix acts by a scalar.

    Each returned basis spans an intersection of eigenspaces, one eigenvalue
    chosen per matrix; together they contain every common eigenvector.
    """
    n = mats.shape[1]
    eye = np.eye(n, dtype=np.int64)
    cands = [eye.copy()]
    for g in mats:
        lams = linalg.eigenvalues(g, p)
        nxt = []
        for W in cands:
            for lam in lams:
                V = linalg.intersect_kernel(W, np.mod(g - lam * eye, p), p)
                if len(V):
                    nxt.append(V)
        cands = nxt
        if not cands:
            break
    return cands


def has_common_eigenvector(mats: np.ndarray, p: int) -> bool:
    return bool(common_eigenspaces(mats, p)) if len(mats) else True


def fixes_point(A: ElementSet) -> bool:
    return has_common_eigenvector(A.mats, A.params.p)


def fixes_line(A: ElementSet) -> bool:
    """A common invariant plane, i.e. a fixed point of the dual action."""
    return has_common_eigenvector(np.ascontiguousarray(A.mats.transpose(0, 2, 1)), A.params.p)


# ---------------------------------------------------------------------------
# invariant quadratic forms

_SYM_IDX = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)]


def _sym_basis() -> np.ndarray:
    out = np.zeros((6, 3, 3), dtype=np.int64)
    for k, (i, j) in enumerate(_SYM_IDX):
        out[k, i, j] = 1
        out[k, j, i] = 1
    return out


def _form_equations(g: np.ndarray, lam: int, p: int) -> np.ndarray:
    """Rows of the linear map ``Q -> gᵀ Q g - lam Q`` on the symmetric basis."""
    basis = _sym_basis()
    cols = [np.mod(g.T @ E @ g - lam * E, p).ravel() for E in basis]
    return np.stack(cols, axis=1)


@dataclass
class FormSearch:
    found: bool
    form: list[list[int]] | None
    exhaustive: bool


def invariant_quadratic_form(A: ElementSet, *, sample: int = 4000, seed: int = 0, max_branches: int = 729) -> FormSearch:
    """Search for nondegenerate symmetric ``Q`` with ``gᵀ Q g = ζ_g Q``, ``ζ_g³ = 1``.

    Scalars ``ζ_g`` other than 1 only occur when p ≡ 1 mod 3 and account for
    the centre of SL3.  The solution space for each choice of scalars is
    searched exhaustively when its dimension is at most 3 (or small enough
    to enumerate), otherwise sampled.
    """
    p = A.params.p
    if A.params.n != 3:
        raise ValueError("quadratic forms are for n = 3")
    roots = [z for z in range(1, p) if pow(z, 3, p) == 1]
    basis = _sym_basis()
    spaces = [np.eye(6, dtype=np.int64)]
    for g in A.mats:
        nxt = []
        for W in spaces:
            for z in roots:
                V = linalg.intersect_kernel(W, _form_equations(g, z, p), p)
                if len(V):
                    nxt.append(V)
        spaces = nxt[:max_branches]
        if not spaces:
            return FormSearch(False, None, True)
    exhaustive = True
    rng = make_rng(seed)
    for W in spaces:
        d = len(W)
        if d <= 3 or p**d <= 10**6:
            coeff_iter = itertools.product(range(p), repeat=d)
        else:
            exhaustive = False
            coeff_iter = (tuple(rng.integers(0, p, d).tolist()) for _ in range(sample))
        for coeffs in coeff_iter:
            if not any(coeffs):
                continue
            vec = np.mod(np.asarray(coeffs) @ W, p)
            Q = np.mod(np.tensordot(vec, basis, axes=1), p)
            if linalg.det(Q, p):
                return FormSearch(True, Q.tolist(), exhaustive)
    return FormSearch(False, None, exhaustive)


# ---------------------------------------------------------------------------
# abelian subgroups of small index


def commuting_table(H: ElementSet) -> np.ndarray:
    p = H.params.p
    codec = H.params.codec
    m = len(H)
    out = np.empty((m, m), dtype=bool)
    step = max(1, (1 << 19) // m)
    for lo in range(0, m, step):
        a = H.mats[lo : lo + step]
        ab = codec.keys(np.mod(np.einsum("aij,bjk->abik", a, H.mats), p).reshape(-1, H.params.n, H.params.n))
        ba = codec.keys(np.mod(np.einsum("bij,ajk->abik", H.mats, a), p).reshape(-1, H.params.n, H.params.n))
        out[lo : lo + step] = (ab == ba).reshape(len(a), m)
    return out


def abelian_subgroup_index_le(H: ElementSet, index: int = 6, node_budget: int = 200_000) -> bool | None:
    """Whether the group ``H`` has an abelian subgroup of index at most ``index``.

    Every abelian subgroup lies in the centraliser of a set of its elements.
    The search walks centraliser intersections ``C``: if ``C`` or its centre
    is large and abelian we are done, otherwise branch on non-central
    elements of ``C``.  Returns None when ``H`` is too large or the node
    budget runs out.
    """
    m = len(H)
    t = -(-m // index)
    if m > ABELIAN_SEARCH_LIMIT:
        return None
    comm = commuting_table(H)
    big = comm.sum(axis=1) >= t
    seen: set[bytes] = set()
    nodes = 0

    def rec(C: np.ndarray) -> bool | None:
        nonlocal nodes
        nodes += 1
        if nodes > node_budget:
            return None
        if C.sum() < t:
            return False
        key = np.packbits(C).tobytes()
        if key in seen:
            return False
        seen.add(key)
        idx = np.flatnonzero(C)
        sub = comm[np.ix_(idx, idx)]
        central = sub.all(axis=1)
        if central.all():
            return True
        if central.sum() >= t:
            return True
        unknown = False
        for j in np.flatnonzero(~central & big[idx]):
            nxt = C & comm[idx[j]]
            res = rec(nxt)
            if res:
                return True
            if res is None:
                unknown = True
        return None if unknown else False

    return rec(np.ones(m, dtype=bool))


# ---------------------------------------------------------------------------
# classifiers


@dataclass
class ClassificationFlags:
    n: int
    flags: dict
    order: int | None
    details: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "flags": self.flags, "order": self.order, "details": self.details}, sort_keys=True)

    def any_proper_flag(self) -> bool:
        return any(v for k, v in self.flags.items() if k != "full_group")


def _closure_or_none(A: ElementSet, cap: int | None) -> ElementSet | None:
    try:
        return closure(A, cap=cap)
    except CapExceeded:
        return None


def classify_sl3(A: ElementSet, cap: int | None = 10**6) -> ClassificationFlags:
    if A.params.n != 3:
        raise ValueError("classify_sl3 needs n = 3")
    p = A.params.p
    H = _closure_or_none(A, cap)
    order = len(H) if H is not None else None
    full = order == A.params.group_order
    if full:
        flags = dict.fromkeys(
            ["fixes_point", "fixes_line", "abelian_index_le6", "preserves_quadratic_form", "order_le_1080"], False
        )
        flags["full_group"] = True
        return ClassificationFlags(3, flags, order)
    form = invariant_quadratic_form(A)
    flags = {
        "fixes_point": fixes_point(A),
        "fixes_line": fixes_line(A),
        "abelian_index_le6": abelian_subgroup_index_le(H) if H is not None else None,
        "preserves_quadratic_form": form.found,
        "order_le_1080": (order <= 1080) if order is not None else None,
        "full_group": False if order is not None else None,
    }
    details = {"form": form.form, "form_search_exhaustive": form.exhaustive}
    return ClassificationFlags(3, flags, order, details)


def in_torus_normalizer(A: ElementSet) -> bool:
    """Is there a regular semisimple ``t`` each generator commutes with or inverts?

    If ``<A>`` normalises a torus, ``A ∪ AA`` already contains a regular
    semisimple element of it unless ``<A>`` is tiny, which the fallback over
    the closure covers.
    """
    p = A.params.p
    from .elementset import product

    pool = A.union(product(A, A))
    cands = pool.mats[batch_is_regular_semisimple(pool.mats, p)]
    if len(cands) == 0:
        H = _closure_or_none(A, 10**5)
        if H is None:
            return False
        cands = H.mats[batch_is_regular_semisimple(H.mats, p)]
    for t in cands:
        tinv = linalg_inv2(t, p)
        ok = True
        for g in A.mats:
            conj = np.mod(np.mod(g @ t, p) @ linalg_inv2(g, p), p)
            if not (np.array_equal(conj, t) or np.array_equal(conj, tinv)):
                ok = False
                break
        if ok:
            return True
    return False


def linalg_inv2(m: np.ndarray, p: int) -> np.ndarray:
    from .field import batch_inv

    return batch_inv(m[None], p)[0]


def classify_sl2(A: ElementSet, cap: int | None = 10**6) -> ClassificationFlags:
    if A.params.n != 2:
        raise ValueError("classify_sl2 needs n = 2")
    p = A.params.p
    G_order = A.params.group_order
    H = _closure_or_none(A, cap)
    order = len(H) if H is not None else None
    if order == G_order:
        flags = {"in_borel": False, "in_torus_normalizer": False, "order_le_120": False, "full_group": True}
        return ClassificationFlags(2, flags, order)
    flags = {
        "in_borel": fixes_point(A),
        "in_torus_normalizer": in_torus_normalizer(A),
        "order_le_120": (order <= 120) if order is not None else None,
        "full_group": False if order is not None else None,
    }
    details = {}
    if order is not None:
        index = G_order // order
        details["index"] = index
        details["index_at_least_p_plus_1"] = index >= p + 1
    return ClassificationFlags(2, flags, order, details)


def classify(A: ElementSet, cap: int | None = 10**6) -> ClassificationFlags:
    return classify_sl2(A, cap) if A.params.n == 2 else classify_sl3(A, cap)


def proper_subgroup_order_bound(params: FieldParams) -> int:
    """Largest order of a proper subgroup not fixing a point or line (p odd, n=3)
    or not in a Borel or torus normaliser (n=2)."""
    p = params.p
    if params.n == 2:
        return 120
    return max(1080, 6 * (p - 1) ** 2, 3 * (p * p + p + 1), 3 * p * (p * p - 1))


def generates(A: ElementSet) -> bool:
    """Does ``A`` generate all of SL_n(F_p)?

    Small groups are enumerated.  Otherwise the subgroup classification is
    used: a subgroup that is irreducible (no fixed point or line, n=3; not in
    a Borel or torus normaliser, n=2) and larger than every remaining
    maximal-subgroup type is the whole group.
    """
    params = A.params
    if params.group_order <= 10**5 or (params.n == 3 and params.p == 2):
        return len(closure(A)) == params.group_order
    if params.n == 2:
        if fixes_point(A) or in_torus_normalizer(A):
            return False
    else:
        if fixes_point(A) or fixes_line(A):
            return False
    bound = proper_subgroup_order_bound(params)
    count = 0
    for layer in bfs_layers(params.identity.array[None], A.mats, params):
        count += len(layer)
        if count > bound:
            return True
    return count == params.group_order


def random_generating_set(params: FieldParams, k: int, rng, max_tries: int = 1000) -> ElementSet:
    from .field import random_matrices

    for _ in range(max_tries):
        A = ElementSet(params, random_matrices(params, k, rng))
        if len(A) == k and generates(A):
            return A
    raise RuntimeError("no generating set found")


# ---------------------------------------------------------------------------
# unipotent subgroups

BETSON_LABELS = ("trivial", "full", "mata1", "mata2", "matorner", "matb1", "matb2", "doloro", "dogar")


def is_upper_unitriangular(mats: np.ndarray) -> np.ndarray:
    n = mats.shape[1]
    ok = np.ones(len(mats), dtype=bool)
    for i in range(n):
        ok &= mats[:, i, i] == 1
        for j in range(i):
            ok &= mats[:, i, j] == 0
    return ok


def betson_classify(H: ElementSet, *, check_closed: bool = True) -> str:
    """Conjugacy type of a subgroup of the upper unitriangular group of SL3.

    Decided from the image in ``U/N`` (coordinates ``(x, z)`` of the
    superdiagonal) and from whether ``H`` contains the centre ``N``.
    """
    from .growth import is_closed

    if H.params.n != 3:
        raise ValueError("betson_classify needs n = 3")
    if not np.all(is_upper_unitriangular(H.mats)):
        raise ValueError("H is not unipotent upper triangular")
    if check_closed and not is_closed(H):
        raise ValueError("H is not a subgroup")
    p = H.params.p
    xz = {(int(m[0, 1]), int(m[1, 2])) for m in H.mats}
    center = sum(1 for m in H.mats if m[0, 1] == 0 and m[1, 2] == 0)
    has_center = center == p
    if len(xz) == 1:
        return "matorner" if has_center else "trivial"
    if len(xz) == p * p:
        return "full"
    if all(z == 0 for _, z in xz):
        return "mata1" if has_center else "matb1"
    if all(x == 0 for x, _ in xz):
        return "mata2" if has_center else "matb2"
    return "doloro" if has_center else "dogar"


def betson_canonical(label: str, params: FieldParams) -> ElementSet:
    """The standard representative of each of the nine types."""
    p = params.p
    half = pow(2, -1, p) if p > 2 else None
    pts = []
    r = range(p)
    if label == "trivial":
        pts = [(0, 0, 0)]
    elif label == "full":
        pts = [(x, y, z) for x in r for y in r for z in r]
    elif label == "mata1":
        pts = [(x, y, 0) for x in r for y in r]
    elif label == "mata2":
        pts = [(0, y, z) for y in r for z in r]
    elif label == "matorner":
        pts = [(0, y, 0) for y in r]
    elif label == "matb1":
        pts = [(x, 0, 0) for x in r]
    elif label == "matb2":
        pts = [(0, 0, z) for z in r]
    elif label == "doloro":
        pts = [(x, y, x) for x in r for y in r]
    elif label == "dogar":
        if half is None:
            raise ValueError("this type needs p > 2")
        pts = [(x, x * x * half % p, x) for x in r]
    else:
        raise ValueError(f"unknown label {label!r}")
    mats = np.array([[[1, x, y], [0, 1, z], [0, 0, 1]] for x, y, z in pts], dtype=np.int64)
    return ElementSet(params, mats)


def unitriangular_group(params: FieldParams) -> ElementSet:
    p = params.p
    r = range(p)
    mats = np.array([[[1, x, y], [0, 1, z], [0, 0, 1]] for x in r for y in r for z in r], dtype=np.int64)
    return ElementSet(params, mats)


def unipotent_subgroups(params: FieldParams) -> list[ElementSet]:
    """Every subgroup of the upper unitriangular group, as joins of cyclic ones."""
    if params.n != 3:
        raise ValueError("needs n = 3")
    if params.p > 7:
        raise ValueError("exhaustive enumeration is limited to p <= 7")
    U = unitriangular_group(params)
    cyclic = {}
    for g in U.mats:
        C = closure(ElementSet(params, g[None]))
        cyclic.setdefault(tuple(C.keys.tolist()), C)
    subs = dict(cyclic)
    frontier = dict(cyclic)
    while frontier:
        nxt = {}
        for H in frontier.values():
            for C in cyclic.values():
                if C.issubset(H):
                    continue
                J = closure(H.union(C))
                key = tuple(J.keys.tolist())
                if key not in subs and key not in nxt:
                    nxt[key] = J
        subs.update(nxt)
        frontier = nxt
    subs.setdefault(tuple(ElementSet.identity(params).keys.tolist()), ElementSet.identity(params))
    return sorted(subs.values(), key=lambda H: (len(H), H.keys.tolist()))


# ---------------------------------------------------------------------------
# parabolic decomposition


class NotInParabolic(ValueError):
    pass


@dataclass
class ParabolicParts:
    pi_plus: GroupElement
    a0: GroupElement
    pi1: list[list[int]]
    pi2: int
    s: int
    pi_minus: GroupElement | None

    def reassemble(self, params: FieldParams) -> GroupElement:
        return mul(self.pi_plus, self.a0)


def parabolic_decompose(g: GroupElement) -> ParabolicParts:
    """Split ``g`` in the stabiliser of the plane ``<e1, e2>`` with bottom row ``(0, 0, s²)``.

    ``g = π₊(g) · u`` with ``u`` in the translation part; ``π₁`` rescales the
    top-left block by ``s``, taken as the smaller square root of ``s²``.
    """
    params = g.params
    if params.n != 3:
        raise NotInParabolic("needs n = 3")
    p = params.p
    m = g.array
    if m[2, 0] or m[2, 1]:
        raise NotInParabolic("bottom row must be (0, 0, s^2)")
    s2 = int(m[2, 2])
    s = sqrt_mod(s2, p)
    if s is None or s2 == 0:
        raise NotInParabolic(f"{s2} is not a non-zero square mod {p}")
    block = m[:2, :2]
    plus = np.zeros((3, 3), dtype=np.int64)
    plus[:2, :2] = block
    plus[2, 2] = s2
    bi = np.array([[block[1, 1], -block[0, 1]], [-block[1, 0], block[0, 0]]], dtype=np.int64)
    bi = np.mod(bi * pow(int(block[0, 0] * block[1, 1] - block[0, 1] * block[1, 0]) % p, -1, p), p)
    ef = np.mod(bi @ m[:2, 2], p)
    a0 = np.eye(3, dtype=np.int64)
    a0[:2, 2] = ef
    pi1 = np.mod(s * block, p)
    minus = None
    if s2 == 1:
        mm = np.eye(3, dtype=np.int64)
        mm[:2, :2] = block
        minus = GroupElement(tuple(mm.ravel().tolist()), params)
    return ParabolicParts(
        pi_plus=GroupElement(tuple(plus.ravel().tolist()), params),
        a0=GroupElement(tuple(a0.ravel().tolist()), params),
        pi1=pi1.tolist(),
        pi2=s2,
        s=s,
        pi_minus=minus,
    )


def random_parabolic(params: FieldParams, rng) -> GroupElement:
    p = params.p
    while True:
        s = int(rng.integers(1, p))
        blk = rng.integers(0, p, (2, 2))
        d = int(blk[0, 0] * blk[1, 1] - blk[0, 1] * blk[1, 0]) % p
        if d == 0:
            continue
        # scale the first row so that det(block) = s^-2
        want = pow(s * s % p, -1, p)
        blk[0] = blk[0] * want * pow(d, -1, p) % p
        ef = rng.integers(0, p, 2)
        m = np.array([[blk[0, 0], blk[0, 1], ef[0]], [blk[1, 0], blk[1, 1], ef[1]], [0, 0, s * s % p]])
        return GroupElement(tuple(int(x) for x in m.ravel()), params)


# ---------------------------------------------------------------------------
# U1 U2 U1 U2 factorisation


def _upper(a, b, c, params) -> GroupElement:
    return GroupElement((1, a, b, 0, 1, c, 0, 0, 1), params)


def _lower(a, b, c, params) -> GroupElement:
    return GroupElement((1, 0, 0, a, 1, 0, b, c, 1), params)


def _unit_lu(m: np.ndarray, p: int):
    """Doolittle factors of a matrix whose leading principal minors are all 1."""
    L = np.eye(3, dtype=np.int64)
    U = np.zeros((3, 3), dtype=np.int64)
    U[0] = m[0]
    L[1, 0] = m[1, 0]
    L[2, 0] = m[2, 0]
    U[1, 1] = (m[1, 1] - L[1, 0] * U[0, 1]) % p
    U[1, 2] = (m[1, 2] - L[1, 0] * U[0, 2]) % p
    L[2, 1] = (m[2, 1] - L[2, 0] * U[0, 1]) % p
    U[2, 2] = (m[2, 2] - L[2, 0] * U[0, 2] - L[2, 1] * U[1, 2]) % p
    return np.mod(L, p), np.mod(U, p)


def _try_u1u2u1(h: np.ndarray, p: int):
    """Find upper unitriangular ``x`` with ``x h`` having unit leading minors."""
    h11, h21, h31 = (int(h[i, 0]) for i in range(3))

    def minor(i, j):
        return int(h[i, 0] * h[j, 1] - h[i, 1] * h[j, 0]) % p

    m12, m13, m23 = minor(0, 1), minor(0, 2), minor(1, 2)
    for c in range(p):
        M = [[h21, h31], [c * m23 % p, -m23 % p]]
        rhs = [(1 - h11) % p, (1 - m12 - c * m13) % p]
        sol = linalg.solve(M, rhs, p)
        if sol is None:
            continue
        a, b = int(sol[0]), int(sol[1])
        x = np.array([[1, a, b], [0, 1, c], [0, 0, 1]], dtype=np.int64)
        return x, np.mod(x @ h, p)
    return None


@dataclass
class Factorization:
    u1: GroupElement
    u2: GroupElement
    u1p: GroupElement
    u2p: GroupElement

    def product(self) -> GroupElement:
        return mul(mul(mul(self.u1, self.u2), self.u1p), self.u2p)

    def as_tuple(self):
        return (self.u1, self.u2, self.u1p, self.u2p)


def u1u2_factorize(g: GroupElement) -> Factorization:
    """``g = u1 u2 u1' u2'`` with ``u1, u1'`` upper and ``u2, u2'`` lower unitriangular.

    For ``u2'`` running over the lower unitriangular group in canonical order,
    look for ``x`` upper unitriangular such that ``x g u2'⁻¹`` has all leading
    principal minors equal to 1; its unit LU factors then give ``u2`` and
    ``u1'``, and ``u1 = x⁻¹``.
    """
    params = g.params
    if params.n != 3:
        raise ValueError("u1u2_factorize needs n = 3")
    p = params.p
    I = params.identity
    m = g.array
    if is_upper_unitriangular(m[None])[0]:
        return Factorization(g, I, I, I)
    if is_upper_unitriangular(np.ascontiguousarray(m.T)[None])[0]:
        return Factorization(I, g, I, I)
    # lower unitriangular elements in code order: entries (1,0), (2,0), (2,1)
    # have weights p^3, p^6, p^7
    for c, b, a in itertools.product(range(p), repeat=3):
        u2p = _lower(a, b, c, params)
        h = np.mod(m @ inv(u2p).array, p)
        hit = _try_u1u2u1(h, p)
        if hit is None:
            continue
        x, xh = hit
        L, U = _unit_lu(xh, p)
        xi = inv(GroupElement(tuple(x.ravel().tolist()), params))
        out = Factorization(
            xi,
            GroupElement(tuple(L.ravel().tolist()), params),
            GroupElement(tuple(U.ravel().tolist()), params),
            u2p,
        )
        if out.product() != g:  # pragma: no cover
            raise AssertionError("factorisation failed to reproduce g")
        return out
    raise AssertionError("no factorisation found")  # pragma: no cover
