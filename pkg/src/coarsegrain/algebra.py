"""Finite-dimensional *-subalgebras of ``M_n``.

A :class:`StarAlgebra` is stored as a Hilbert-Schmidt orthonormal basis of
Hermitian matrices. :func:`block_structure` recovers its Wedderburn form
``z_p A ~ M_d kron I_m`` numerically: center by a linear solve, minimal
central projections from a generic central element, matrix units from a
generic element of each simple summand.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg as la
from .channels import LinearMap, as_linear_map, vec
from .errors import DimensionError, FactorizationError, PreconditionError

#: {+-1/pi, +-1/2, +-1, +-2}
DEFAULT_T_GRID = (-2.0, -1.0, -0.5, -1 / np.pi, 1 / np.pi, 0.5, 1.0, 2.0)
CLOSURE_TOL = 1e-9
RANK_TOL = 1e-8
FIXED_POINT_WINDOW = 1e-9


def _herm_rows(mats: np.ndarray) -> np.ndarray:
    """Real row vectors ``[Re vec, Im vec]`` for a stack of Hermitian matrices."""
    flat = mats.reshape(mats.shape[0], -1)
    return np.hstack([flat.real, flat.imag])


def hermitian_span_basis(mats, rank_tol: float = RANK_TOL) -> np.ndarray:
    """HS-orthonormal Hermitian basis of the *-closed complex span of ``mats``."""
    mats = np.asarray(mats, dtype=np.complex128)
    if mats.ndim == 2:
        mats = mats[None]
    n = mats.shape[-1]
    if mats.shape[0] == 0:
        return np.zeros((0, n, n), dtype=np.complex128)
    adj = la.dag(mats)
    herm = np.concatenate([(mats + adj) / 2, (mats - adj) / 2j])
    rows = _herm_rows(herm)
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        return np.zeros((0, n, n), dtype=np.complex128)
    r = int(np.sum(s > rank_tol * s[0]))
    v = vh[:r]
    out = (v[:, : n * n] + 1j * v[:, n * n:]).reshape(r, n, n)
    return (out + la.dag(out)) / 2


@dataclass(frozen=True, eq=False)
class StarAlgebra:
    """Unital *-subalgebra given by an HS-orthonormal Hermitian basis."""

    basis: np.ndarray
    unit: np.ndarray

    @classmethod
    def from_span(cls, mats, rank_tol: float = RANK_TOL, tol: float = CLOSURE_TOL) -> "StarAlgebra":
        basis = hermitian_span_basis(mats, rank_tol)
        if basis.shape[0] == 0:
            raise PreconditionError("empty span is not an algebra")
        return cls(basis, _find_unit(basis, tol))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[-1]

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def _rows(self) -> np.ndarray:
        return self.basis.reshape(self.dim, -1)

    def coefficients(self, x) -> np.ndarray:
        """``<b_k, x>`` for each basis element."""
        return self._rows().conj() @ vec(x)

    def project(self, x) -> np.ndarray:
        """HS-orthogonal projection onto the span."""
        c = self.coefficients(x)
        return (c @ self._rows()).reshape(self.ambient_dim, self.ambient_dim)

    def distance(self, x) -> float:
        return la.hs_norm(np.asarray(x) - self.project(x))

    def distances(self, mats: np.ndarray) -> np.ndarray:
        flat = np.asarray(mats, dtype=np.complex128).reshape(len(mats), -1)
        rows = self._rows()
        resid = flat - (flat @ rows.conj().T) @ rows
        return np.linalg.norm(resid, axis=1)

    def contains(self, x, tol: float = CLOSURE_TOL) -> bool:
        return self.distance(x) <= tol * max(1.0, la.hs_norm(x))

    def closure_defects(self) -> tuple[float, float, float]:
        """Max distances of ``b*``, ``b c`` and the unit from the span."""
        b = self.basis
        adj = self.distances(la.dag(b)).max()
        prods = np.einsum("iab,jbc->ijac", b, b).reshape(-1, self.ambient_dim, self.ambient_dim)
        prod = self.distances(prods).max()
        unit = self.distance(self.unit)
        return float(adj), float(prod), float(unit)

    def check_closure(self, tol: float = CLOSURE_TOL) -> "StarAlgebra":
        adj, prod, unit = self.closure_defects()
        if max(adj, prod, unit) > tol:
            raise PreconditionError(
                f"span is not a *-algebra: adjoint defect {adj:.2e}, "
                f"product defect {prod:.2e}, unit defect {unit:.2e} (tol {tol:.0e})"
            )
        return self


def _find_unit(basis: np.ndarray, tol: float) -> np.ndarray:
    n, dim = basis.shape[0], basis.shape[-1]
    # real c with (sum_k c_k b_k) b_j = b_j for every j
    prods = np.einsum("kab,jbc->jkac", basis, basis).reshape(n, n, dim * dim)
    a = prods.transpose(0, 2, 1).reshape(n * dim * dim, n)
    y = basis.reshape(-1)
    a_r = np.vstack([a.real, a.imag])
    y_r = np.concatenate([y.real, y.imag])
    c, *_ = np.linalg.lstsq(a_r, y_r, rcond=None)
    unit = np.einsum("k,kab->ab", c, basis)
    if la.hs_norm(a_r @ c - y_r) > tol * max(1.0, np.sqrt(n)):
        raise PreconditionError("span has no multiplicative unit")
    return (unit + la.dag(unit)) / 2


def full_algebra(dim: int) -> StarAlgebra:
    units = np.eye(dim * dim, dtype=np.complex128).reshape(dim * dim, dim, dim)
    return StarAlgebra(hermitian_span_basis(units), np.eye(dim, dtype=np.complex128))


def diagonal_algebra(dim: int) -> StarAlgebra:
    basis = np.zeros((dim, dim, dim), dtype=np.complex128)
    for k in range(dim):
        basis[k, k, k] = 1.0
    return StarAlgebra(basis, np.eye(dim, dtype=np.complex128))


def block_diagonal_algebra(shapes: Sequence[tuple[int, int]]) -> StarAlgebra:
    """Algebra of ``Diag(B_1, ..., B_1, B_2, ..., B_2, ...)``: each ``(d, m)`` is
    a free ``d x d`` block repeated ``m`` times consecutively."""
    total = sum(d * m for d, m in shapes)
    mats = []
    offset = 0
    for d, m in shapes:
        for j in range(d):
            for k in range(d):
                x = np.zeros((total, total), dtype=np.complex128)
                for c in range(m):
                    x[offset + c * d + j, offset + c * d + k] = 1.0
                mats.append(x)
        offset += d * m
    return StarAlgebra.from_span(np.array(mats))


# ----------------------------------------------------------------------
# fixed points
# ----------------------------------------------------------------------


def fixed_point_algebra(gamma, state, window: float = FIXED_POINT_WINDOW,
                        tol: float = CLOSURE_TOL) -> StarAlgebra:
    """Fixed points of a unital CP map preserving the faithful ``state``.

    Computed as the null space of ``S - I`` for the superoperator ``S``; the
    *-algebra axioms are then verified rather than assumed.
    """
    phi = as_linear_map(gamma)
    if phi.in_dim != phi.out_dim:
        raise DimensionError("fixed points need a map from an algebra to itself")
    n = phi.in_dim
    state = la.as_square(state, "state")
    if state.shape[0] != n:
        raise DimensionError("state dimension does not match the map")
    la.require_invertible(state, name="state")
    if not phi.is_unital(tol):
        raise PreconditionError("map is not unital")
    drift = la.hs_norm(phi.adjoint()(state) - state)
    if drift > tol:
        raise PreconditionError(f"map does not preserve the state (drift {drift:.2e})")
    s = phi.matrix - np.eye(n * n)
    _, sv, vh = np.linalg.svd(s)
    scale = 1.0 + sv[0]     # bounds ||S||_2
    null = vh[sv < window * scale].conj()
    mats = null.reshape(-1, n, n)
    if mats.shape[0] == 0:
        raise PreconditionError("no fixed points found; is the map unital?")
    alg = StarAlgebra(hermitian_span_basis(mats), np.eye(n, dtype=np.complex128))
    return alg.check_closure(tol)


# ----------------------------------------------------------------------
# block structure
# ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Block:
    z: np.ndarray
    d: int
    m: int
    V: np.ndarray

    def embed(self, x) -> np.ndarray:
        """``V (x kron I_m) V*`` for ``x`` in ``M_d``."""
        return self.V @ np.kron(x, np.eye(self.m)) @ la.dag(self.V)

    def embed_commutant(self, y) -> np.ndarray:
        """``V (I_d kron y) V*`` for ``y`` in ``M_m``."""
        return self.V @ np.kron(np.eye(self.d), y) @ la.dag(self.V)

    def compress(self, x) -> np.ndarray:
        return la.dag(self.V) @ x @ self.V


@dataclass(frozen=True, eq=False)
class BlockStructure:
    blocks: tuple
    unit: np.ndarray

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [(b.d, b.m) for b in self.blocks]

    def __len__(self) -> int:
        return len(self.blocks)

    def assemble(self, xs: Sequence[np.ndarray]) -> np.ndarray:
        if len(xs) != len(self.blocks):
            raise DimensionError("one matrix per block required")
        return sum(b.embed(x) for b, x in zip(self.blocks, xs))

    def projection(self, d: int | None = None, m: int | None = None) -> np.ndarray:
        """Sum of central projections with the given block dimension and/or multiplicity."""
        n = self.unit.shape[0]
        p = np.zeros((n, n), dtype=np.complex128)
        for b in self.blocks:
            if (d is None or b.d == d) and (m is None or b.m == m):
                p = p + b.z
        return p


def center(a: StarAlgebra, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Hermitian basis (stack) of the center of ``a``."""
    b = a.basis
    n = a.dim
    comm = np.einsum("kab,jbc->jkac", b, b) - np.einsum("jab,kbc->jkac", b, b)
    mat = comm.transpose(0, 2, 3, 1).reshape(-1, n)
    mat_r = np.vstack([mat.real, mat.imag])
    _, s, vh = np.linalg.svd(mat_r, full_matrices=False)
    # commutators of HS-normalised elements are O(1); never scale by noise
    scale = max(float(s[0]), 1.0) if s.size else 1.0
    rank = int(np.sum(s > rank_tol * scale))
    coeffs = vh[rank:]
    return np.einsum("ck,kab->cab", coeffs, b)


def _range_basis(p: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((p + la.dag(p)) / 2)
    return vecs[:, vals > 0.5]


def _spectral_groups(h: np.ndarray, q: np.ndarray, gap: float):
    """Spectral subspaces (as isometries) of ``h`` restricted to ``range(q)``."""
    hq = la.dag(q) @ h @ q
    vals, vecs = np.linalg.eigh((hq + la.dag(hq)) / 2)
    groups = la.degenerate_groups(vals, gap)
    return [(float(vals[g].mean()), q @ vecs[:, g]) for g in groups]


def _polar_unitary(y: np.ndarray) -> np.ndarray:
    u, _, wh = np.linalg.svd(y)
    return u @ wh


def block_structure(a: StarAlgebra, seed=0, gap: float = la.DEGENERACY_GAP,
                    rank_tol: float = RANK_TOL, tol: float = CLOSURE_TOL) -> BlockStructure:
    """Minimal central projections, block shapes and block isometries of ``a``.

    Blocks are ordered by descending ``d``, then descending ``m``. The generic
    elements are drawn from ``seed`` so the output is deterministic.
    """
    rng = la.as_rng(seed)
    a.check_closure(tol)
    q_unit = _range_basis(a.unit)
    cen = center(a, rank_tol)
    h = np.einsum("c,cab->ab", rng.standard_normal(cen.shape[0]), cen)
    found = []
    for val, w in _spectral_groups(h, q_unit, gap):
        z = w @ la.dag(w)
        if not a.contains(z, 1e-7):
            raise FactorizationError("spectral projection of a central element left the algebra")
        found.append((val, z, w))

    blocks = []
    for val, z, w in found:
        sub = hermitian_span_basis(np.einsum("ab,kbc,cd->kad", z, a.basis, z), rank_tol)
        n_p = sub.shape[0]
        d = int(round(np.sqrt(n_p)))
        rank = float(np.trace(z).real)
        if d * d != n_p:
            raise FactorizationError(f"block algebra dimension {n_p} is not a square")
        m_float = rank / d
        m = int(round(m_float))
        if abs(m_float - m) > 1e-6 or m < 1:
            raise FactorizationError(f"block multiplicity {m_float:.6f} is not an integer")
        g = np.einsum("k,kab->ab", rng.standard_normal(n_p), sub)
        parts = _spectral_groups(g, w, gap)
        if len(parts) != d or any(p.shape[1] != m for _, p in parts):
            raise FactorizationError(
                f"generic element of a {d}x{d} block split as {[p.shape[1] for _, p in parts]}"
            )
        q1 = parts[0][1]
        cols = [q1]
        for _, qk in parts[1:]:
            cand = np.einsum("ab,kbc,cd->kad", la.dag(q1), sub, qk)
            best = cand[np.argmax(np.linalg.norm(cand.reshape(n_p, -1), axis=1))]
            cols.append(qk @ la.dag(_polar_unitary(best)))
        v = np.hstack(cols)
        blocks.append(((-d, -m, val), Block(z, d, m, v)))

    blocks.sort(key=lambda kv: kv[0])
    bs = BlockStructure(tuple(b for _, b in blocks), a.unit)
    _verify_blocks(a, bs, tol)
    return bs


def _verify_blocks(a: StarAlgebra, bs: BlockStructure, tol: float) -> None:
    total = sum(b.z for b in bs.blocks)
    if la.hs_norm(total - a.unit) > tol:
        raise FactorizationError("central projections do not sum to the unit")
    if sum(b.d ** 2 for b in bs.blocks) != a.dim:
        raise FactorizationError("sum of d_p^2 differs from the algebra dimension")
    for p, b in enumerate(bs.blocks):
        if la.hs_norm(la.dag(b.V) @ b.V - np.eye(b.d * b.m)) > tol:
            raise FactorizationError("block isometry is not an isometry", block=p)
        for x in a.basis:
            c = b.compress(x)
            red = la.partial_trace(c, (b.d, b.m), keep=[0]) / b.m
            if la.hs_norm(c - np.kron(red, np.eye(b.m))) > tol:
                raise FactorizationError("compressed element not of the form x kron I_m", block=p)


# ----------------------------------------------------------------------
# modular stability and conditional expectation
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    max_distance: float
    distances: dict = field(default_factory=dict)
    tol: float = 1e-8


def check_modular_stability(a: StarAlgebra, d, t_grid=DEFAULT_T_GRID,
                            tol: float = 1e-8) -> StabilityReport:
    """Distance of ``d^{it} b d^{-it}`` from ``a`` over the grid and the basis."""
    d = la.require_invertible(d, name="density")
    dist = {}
    for t in t_grid:
        u = la.imaginary_power(d, t)
        rotated = np.einsum("ab,kbc,cd->kad", u, a.basis, la.dag(u))
        dist[float(t)] = float(a.distances(rotated).max())
    worst = max(dist.values()) if dist else 0.0
    return StabilityReport(worst < tol, worst, dist, tol)


def conditional_expectation(a: StarAlgebra, d, t_grid=DEFAULT_T_GRID,
                            tol: float = 1e-8) -> LinearMap:
    """``d``-preserving conditional expectation onto ``a``.

    It is the orthogonal projection for ``<A, B>_d = Tr A* d^{1/2} B d^{1/2}``,
    which exists as a conditional expectation only when ``a`` is stable
    under ``d^{it} . d^{-it}``.
    """
    rep = check_modular_stability(a, d, t_grid, tol)
    if not rep.stable:
        raise PreconditionError(
            f"algebra is not stable under the modular group (distance {rep.max_distance:.2e})"
        )
    r = la.sqrtm_psd(d)
    b = a.basis
    n = a.ambient_dim
    weighted = np.einsum("ab,kbc,cd->kad", r, b, r)
    w_rows = weighted.transpose(0, 2, 1).reshape(a.dim, -1)   # Tr(r b_j r X) = w_j . vec(X)
    gram = w_rows @ b.reshape(a.dim, -1).T
    s = b.reshape(a.dim, -1).T @ np.linalg.solve(gram, w_rows)
    return LinearMap(s, n, n)


def in_multiplicative_domain(phi, x, tol: float = 1e-9) -> bool:
    return max(multiplicative_defects(phi, x)) < tol


def multiplicative_defects(phi, x) -> tuple[float, float]:
    x = la.as_square(x)
    xs = la.dag(x)
    left = la.hs_norm(phi(x @ xs) - phi(x) @ phi(xs))
    right = la.hs_norm(phi(xs @ x) - phi(xs) @ phi(x))
    return left, right


# ----------------------------------------------------------------------
# unitaries normalising an algebra
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class UnitaryFactorization:
    v: np.ndarray
    w: np.ndarray
    residual: float


def _subalgebra_defect(u: np.ndarray, d: int, m: int) -> tuple[float, dict]:
    images = {}
    worst = 0.0
    for j in range(d):
        for k in range(d):
            e = np.zeros((d, d), dtype=np.complex128)
            e[j, k] = 1.0
            y = u @ np.kron(e, np.eye(m)) @ la.dag(u)
            red = la.partial_trace(y, (d, m), keep=[0]) / m
            worst = max(worst, la.hs_norm(y - np.kron(red, np.eye(m))))
            images[j, k] = red
    return worst, images


def factor_tensor_unitary(u, d: int, m: int, tol: float = 1e-8) -> UnitaryFactorization:
    """Write a unitary ``u`` normalising ``M_d kron I_m`` as ``v kron w``.

    ``v`` realises the automorphism ``x -> u (x kron I) u*`` of ``M_d``; the
    remainder ``(v kron I)* u`` commutes with ``M_d kron I`` and is ``I kron w``.
    The first nonzero entry of ``v`` is made real positive.
    """
    u = la.as_square(u, "u")
    if u.shape[0] != d * m:
        raise DimensionError(f"u has dimension {u.shape[0]}, expected {d * m}")
    if not la.is_unitary(u, 1e-10):
        raise PreconditionError("u is not unitary")
    defect, f = _subalgebra_defect(u, d, m)
    if defect > tol:
        raise PreconditionError(
            f"Ad_u does not preserve M_{d} kron I_{m} (defect {defect:.3g})"
        )
    f00 = f[0, 0]
    j = int(np.argmax(np.linalg.norm(f00, axis=0)))
    xi = f00[:, j] / np.linalg.norm(f00[:, j])
    v = np.column_stack([f[k, 0] @ xi for k in range(d)])
    v = _polar_unitary(v)
    nz = np.nonzero(np.abs(v[:, 0]) > 1e-12)[0]
    ph = v[nz[0], 0] / abs(v[nz[0], 0])
    v = v / ph
    rest = np.kron(la.dag(v), np.eye(m)) @ u
    w = _polar_unitary(la.partial_trace(rest, (d, m), keep=[1]) / d)
    resid = la.hs_norm(u - np.kron(v, w))
    if resid > tol:
        raise FactorizationError(f"tensor factorization residual {resid:.3g} exceeds {tol:g}",
                                 residual=resid)
    return UnitaryFactorization(v, w, resid)


@dataclass(frozen=True)
class UnitaryBlockReport:
    commutes_with_Pm: bool
    commutes_with_Pd: bool
    block_permutation: tuple
    max_commutator: float


def unitary_block_analysis(u, a: StarAlgebra, structure: BlockStructure | None = None,
                           tol: float = 1e-8, seed=0) -> UnitaryBlockReport:
    """Check how a unitary with ``u a u* = a`` acts on the block structure.

    ``commutes_with_Pm`` refers to the multiplicity projections ``P_m``;
    ``commutes_with_Pd`` to the finer ``P_{m,d}``. ``block_permutation[p]`` is
    the block onto which ``u z_p u*`` lands.
    """
    u = la.as_square(u, "u")
    if u.shape[0] != a.ambient_dim:
        raise DimensionError("unitary and algebra act on different spaces")
    moved = np.einsum("ab,kbc,cd->kad", u, a.basis, la.dag(u))
    if a.distances(moved).max() > tol:
        raise PreconditionError("Ad_u does not map the algebra into itself")
    bs = structure if structure is not None else block_structure(a, seed)
    ms = sorted({b.m for b in bs.blocks})
    shapes = sorted({(b.d, b.m) for b in bs.blocks})

    def comm(p):
        return la.hs_norm(u @ p - p @ u)

    pm = [comm(bs.projection(m=m)) for m in ms]
    pmd = [comm(bs.projection(d=d, m=m)) for d, m in shapes]
    sigma = []
    for b in bs.blocks:
        img = u @ b.z @ la.dag(u)
        errs = [la.hs_norm(img - c.z) for c in bs.blocks]
        q = int(np.argmin(errs))
        if errs[q] > tol:
            raise FactorizationError("central projection not mapped onto a central projection")
        sigma.append(q)
    if sorted(sigma) != list(range(len(bs.blocks))):
        raise FactorizationError(f"block map {sigma} is not a permutation")
    worst = max(pm + pmd)
    return UnitaryBlockReport(max(pm) < tol, max(pmd) < tol, tuple(sigma), worst)
