"""Completely positive maps in Kraus form and their state-dependent duals.

Superoperators use row-major vectorization, ``vec(X)[i*n + j] = X[i, j]``,
so that ``vec(A X B) = (A kron B.T) vec(X)``. With that convention the
Hilbert-Schmidt adjoint of a superoperator is its conjugate transpose.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable, Sequence

import numpy as np

from . import linalg as la
from .errors import DimensionError, InvalidInputError

TP_TOL = 1e-10


def vec(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.complex128).reshape(-1)


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    return np.asarray(v).reshape(rows, rows if cols is None else cols)


def matrix_units(dim: int):
    """Yield ``(j, k, E_jk)`` over the standard basis of ``M_dim``."""
    for j, k in product(range(dim), repeat=2):
        e = np.zeros((dim, dim), dtype=np.complex128)
        e[j, k] = 1.0
        yield j, k, e


@dataclass(frozen=True)
class ChoiMatrix:
    """``sum_jk E_jk kron Phi(E_jk)``; input leg first."""

    matrix: np.ndarray
    in_dim: int
    out_dim: int

    def is_completely_positive(self, tol: float = 1e-10) -> bool:
        return la.is_psd(self.matrix, tol)

    def is_trace_preserving(self, tol: float = 1e-10) -> bool:
        red = la.partial_trace(self.matrix, (self.in_dim, self.out_dim), keep=[0])
        return la.hs_norm(red - np.eye(self.in_dim)) <= tol

    def eigenvalues(self) -> np.ndarray:
        m = self.matrix
        return np.linalg.eigvalsh((m + la.dag(m)) / 2)


def choi_of(phi: Callable[[np.ndarray], np.ndarray], in_dim: int) -> ChoiMatrix:
    """Choi matrix of any linear map given as a callable on ``in_dim`` square matrices."""
    blocks = {}
    for j, k, e in matrix_units(in_dim):
        blocks[j, k] = np.asarray(phi(e), dtype=np.complex128)
    out_dim = blocks[0, 0].shape[0]
    c = np.zeros((in_dim * out_dim, in_dim * out_dim), dtype=np.complex128)
    for (j, k), b in blocks.items():
        c[j * out_dim:(j + 1) * out_dim, k * out_dim:(k + 1) * out_dim] = b
    return ChoiMatrix(c, in_dim, out_dim)


@dataclass(frozen=True, eq=False)
class LinearMap:
    """A linear map ``B(C^in_dim) -> B(C^out_dim)`` stored as its superoperator matrix."""

    matrix: np.ndarray
    in_dim: int
    out_dim: int

    @classmethod
    def from_callable(cls, phi: Callable[[np.ndarray], np.ndarray], in_dim: int) -> "LinearMap":
        cols = [vec(phi(e)) for _, _, e in matrix_units(in_dim)]
        s = np.column_stack(cols)
        out_dim = int(round(np.sqrt(s.shape[0])))
        return cls(s, in_dim, out_dim)

    def __call__(self, x) -> np.ndarray:
        x = la.as_matrix(x)
        if x.shape != (self.in_dim, self.in_dim):
            raise DimensionError(f"expected {self.in_dim}x{self.in_dim} input, got {x.shape}")
        return unvec(self.matrix @ vec(x), self.out_dim)

    def superoperator(self) -> np.ndarray:
        return self.matrix

    def adjoint(self) -> "LinearMap":
        return LinearMap(la.dag(self.matrix), self.out_dim, self.in_dim)

    def compose(self, inner) -> "LinearMap":
        """``self o inner``."""
        inner = as_linear_map(inner)
        if inner.out_dim != self.in_dim:
            raise DimensionError("composition dimension mismatch")
        return LinearMap(self.matrix @ inner.matrix, inner.in_dim, self.out_dim)

    def choi(self) -> ChoiMatrix:
        return choi_of(self, self.in_dim)

    def is_unital(self, tol: float = TP_TOL) -> bool:
        return la.hs_norm(self(np.eye(self.in_dim)) - np.eye(self.out_dim)) <= tol

    def is_trace_preserving(self, tol: float = TP_TOL) -> bool:
        return self.adjoint().is_unital(tol)


@dataclass(frozen=True, eq=False)
class KrausMap:
    """``X -> sum_i L_i X L_i*`` with ``out_dim x in_dim`` coefficients ``L_i``.

    Completely positive by construction. Whether the map is a channel
    (trace preserving) or unital is a property to be checked, since the
    adjoint of a channel is also a ``KrausMap``.
    """

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(la.as_matrix(c, "Kraus coefficient") for c in self.coeffs)
        if not cs:
            raise InvalidInputError("a Kraus map needs at least one coefficient")
        shape = cs[0].shape
        if any(c.shape != shape for c in cs):
            raise DimensionError("Kraus coefficients must share one shape")
        object.__setattr__(self, "coeffs", cs)

    @property
    def in_dim(self) -> int:
        return self.coeffs[0].shape[1]

    @property
    def out_dim(self) -> int:
        return self.coeffs[0].shape[0]

    def __call__(self, x) -> np.ndarray:
        return apply(self, x)

    def adjoint(self) -> "KrausMap":
        return KrausMap(tuple(la.dag(c) for c in self.coeffs))

    def compose(self, inner: "KrausMap") -> "KrausMap":
        """``self o inner``."""
        return compose(self, inner)

    def superoperator(self) -> np.ndarray:
        return sum(np.kron(c, c.conj()) for c in self.coeffs)

    def to_linear_map(self) -> LinearMap:
        return LinearMap(self.superoperator(), self.in_dim, self.out_dim)

    def choi(self) -> ChoiMatrix:
        return choi(self)

    def is_trace_preserving(self, tol: float = TP_TOL) -> bool:
        s = sum(la.dag(c) @ c for c in self.coeffs)
        return la.hs_norm(s - np.eye(self.in_dim)) <= tol

    def is_unital(self, tol: float = TP_TOL) -> bool:
        s = sum(c @ la.dag(c) for c in self.coeffs)
        return la.hs_norm(s - np.eye(self.out_dim)) <= tol


def as_linear_map(phi, dim: int | None = None) -> LinearMap:
    if isinstance(phi, LinearMap):
        return phi
    if isinstance(phi, KrausMap):
        return phi.to_linear_map()
    if callable(phi) and dim is not None:
        return LinearMap.from_callable(phi, dim)
    raise TypeError("expected a KrausMap, LinearMap or (callable, dim)")


def kraus_channel(coeffs: Sequence, tol: float = TP_TOL) -> KrausMap:
    """Build a Kraus map and require ``sum L_i* L_i = I`` within ``tol``."""
    t = KrausMap(tuple(coeffs))
    require_channel(t, tol)
    return t


def require_channel(t: KrausMap, tol: float = TP_TOL) -> KrausMap:
    if not t.is_trace_preserving(tol):
        raise InvalidInputError(f"Kraus coefficients are not trace preserving within {tol:g}")
    return t


# ----------------------------------------------------------------------
# operations
# ----------------------------------------------------------------------


def apply(t: KrausMap, x) -> np.ndarray:
    x = la.as_matrix(x)
    if x.shape != (t.in_dim, t.in_dim):
        raise DimensionError(f"expected {t.in_dim}x{t.in_dim} input, got {x.shape}")
    return sum(c @ x @ la.dag(c) for c in t.coeffs)


def adjoint(t: KrausMap) -> KrausMap:
    return t.adjoint()


def compose(outer: KrausMap, inner: KrausMap) -> KrausMap:
    """``outer o inner``; coefficients are all pairwise products."""
    if outer.in_dim != inner.out_dim:
        raise DimensionError(
            f"cannot compose: outer takes dim {outer.in_dim}, inner yields dim {inner.out_dim}"
        )
    return KrausMap(tuple(a @ b for a in outer.coeffs for b in inner.coeffs))


def choi(t: KrausMap) -> ChoiMatrix:
    # sum_jk E_jk kron L E_jk L* = sum_L |L>><<L| with |L>> = sum_j e_j kron L e_j
    n, m = t.in_dim, t.out_dim
    c = np.zeros((n * m, n * m), dtype=np.complex128)
    for op in t.coeffs:
        v = op.T.reshape(-1)
        c += np.outer(v, v.conj())
    return ChoiMatrix(c, n, m)


def transpose_alpha(t: KrausMap, d1, eps: float | None = None) -> KrausMap:
    """State-dependent dual of ``T*``: coefficients ``T(D1)^{-1/2} L_i D1^{1/2}``.

    Unital; characterised by ``<X, alpha(A)>_{T(D1)} = <T*(X), A>_{D1}``.
    """
    d1 = la.require_invertible(d1, eps, "D1")
    td1 = la.require_invertible(t(d1), eps, "T(D1)")
    r = la.sqrtm_psd(d1)
    s = la.inv_sqrtm(td1, eps)
    return KrausMap(tuple(s @ c @ r for c in t.coeffs))


def petz_dual(t: KrausMap, d1, eps: float | None = None) -> KrausMap:
    """Recovery map ``X -> D1^{1/2} T*(T(D1)^{-1/2} X T(D1)^{-1/2}) D1^{1/2}``.

    Trace preserving, and maps ``T(D1)`` back to ``D1``.
    """
    d1 = la.require_invertible(d1, eps, "D1")
    td1 = la.require_invertible(t(d1), eps, "T(D1)")
    r = la.sqrtm_psd(d1)
    s = la.inv_sqrtm(td1, eps)
    return KrausMap(tuple(r @ la.dag(c) @ s for c in t.coeffs))


# ----------------------------------------------------------------------
# constructors
# ----------------------------------------------------------------------


def identity_channel(dim: int) -> KrausMap:
    return KrausMap((np.eye(dim, dtype=np.complex128),))


def unitary_channel(u) -> KrausMap:
    u = la.as_square(u, "unitary")
    if not la.is_unitary(u):
        raise InvalidInputError("unitary_channel requires a unitary matrix")
    return KrausMap((u,))


def partial_trace_channel(dims: Sequence[int], traced) -> KrausMap:
    """Channel tracing out the factors listed in ``traced``; the rest keep their order."""
    dims = la.check_dims(dims)
    traced = sorted(set(int(i) for i in traced))
    if any(i < 0 or i >= len(dims) for i in traced):
        raise DimensionError(f"traced indices {traced} out of range")
    coeffs = []
    for idx in product(*(range(dims[i]) for i in traced)):
        pick = dict(zip(traced, idx))
        factors = []
        for i, d in enumerate(dims):
            if i in pick:
                bra = np.zeros((1, d), dtype=np.complex128)
                bra[0, pick[i]] = 1.0
                factors.append(bra)
            else:
                factors.append(np.eye(d, dtype=np.complex128))
        coeffs.append(la.tensor_product(*factors))
    return KrausMap(tuple(coeffs))


def dephasing_channel(dim: int) -> KrausMap:
    """Pinching onto the diagonal (the conditional expectation onto diagonal matrices)."""
    coeffs = []
    for k in range(dim):
        p = np.zeros((dim, dim), dtype=np.complex128)
        p[k, k] = 1.0
        coeffs.append(p)
    return KrausMap(tuple(coeffs))


def random_channel(in_dim: int, out_dim: int, n_kraus: int, rng) -> KrausMap:
    """Random channel from a Haar-like Stinespring isometry.

    Needs ``out_dim * n_kraus >= in_dim``.
    """
    if out_dim * n_kraus < in_dim:
        raise InvalidInputError("out_dim * n_kraus must be at least in_dim")
    g = la.ginibre(out_dim * n_kraus, in_dim, rng)
    q, _ = np.linalg.qr(g)
    return KrausMap(tuple(q[k * out_dim:(k + 1) * out_dim, :] for k in range(n_kraus)))
