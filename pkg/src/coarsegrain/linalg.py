"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Hermiticity, positivity and invertibility are explicit predicates with a
tolerance; nothing downstream assumes them silently.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import DimensionError, InvalidInputError, NotHermitianError, SingularMatrixError

#: relative invertibility threshold: eigenvalues <= INVERTIBILITY_EPS * lambda_max count as zero
INVERTIBILITY_EPS = 1e-10
#: eigenvalues closer than this fraction of the spectral scale are one eigenspace
DEGENERACY_GAP = 1e-9
HERMITIAN_TOL = 1e-10


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {a.shape}")
    return a


def as_square(m, name: str = "matrix") -> np.ndarray:
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {a.shape}")
    return a


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hs_norm(m) -> float:
    return float(np.linalg.norm(m))


# ----------------------------------------------------------------------
# predicates
# ----------------------------------------------------------------------


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return hs_norm(a - dag(a)) <= tol * max(1.0, hs_norm(a))


def is_unitary(m, tol: float = 1e-10) -> bool:
    a = np.asarray(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        return False
    return hs_norm(dag(a) @ a - np.eye(a.shape[0])) <= tol


def is_psd(m, tol: float = 1e-10) -> bool:
    if not is_hermitian(m, tol):
        return False
    a = np.asarray(m)
    return bool(np.linalg.eigvalsh((a + dag(a)) / 2)[0] >= -tol)


def is_density(m, tol: float = 1e-10) -> bool:
    return is_psd(m, tol) and abs(np.trace(m) - 1.0) <= tol


def invertibility_eps(m, eps: float | None = None) -> float:
    """Absolute eigenvalue threshold below which ``m`` is treated as singular."""
    if eps is not None:
        return eps
    lam_max = float(np.max(np.abs(np.linalg.eigvalsh(m)))) if np.size(m) else 0.0
    return INVERTIBILITY_EPS * max(lam_max, np.finfo(float).tiny)


def is_invertible(d, eps: float | None = None) -> bool:
    """True when the smallest eigenvalue of the Hermitian ``d`` exceeds ``eps``.

    ``eps`` defaults to ``1e-10`` times the largest eigenvalue.
    """
    a = as_square(d)
    vals = np.linalg.eigvalsh((a + dag(a)) / 2)
    return bool(vals[0] > invertibility_eps(a, eps))


def check_density(d, tol: float = 1e-10, name: str = "density") -> np.ndarray:
    """Validate and return ``d`` as a complex density matrix."""
    a = as_square(d, name)
    if not is_hermitian(a, tol):
        raise NotHermitianError(f"{name} is not Hermitian within {tol:g}")
    a = (a + dag(a)) / 2
    if abs(np.trace(a).real - 1.0) > tol:
        raise InvalidInputError(f"{name} has trace {np.trace(a).real!r}, expected 1")
    if np.linalg.eigvalsh(a)[0] < -tol:
        raise InvalidInputError(f"{name} has a negative eigenvalue")
    return a


def require_invertible(d, eps: float | None = None, name: str = "density") -> np.ndarray:
    a = as_square(d, name)
    if not is_invertible(a, eps):
        raise SingularMatrixError(f"{name} is not invertible (smallest eigenvalue below eps)")
    return a


def check_dims(dims: Sequence[int], total: int | None = None) -> tuple[int, ...]:
    """Validate a tensor-factor dimension list; optionally check its product."""
    dims = tuple(int(x) for x in dims)
    if not dims or any(x < 1 for x in dims):
        raise DimensionError(f"subsystem dims must be a nonempty list of positive ints, got {dims}")
    if total is not None and int(np.prod(dims)) != total:
        raise DimensionError(f"dims {dims} have product {int(np.prod(dims))}, expected {total}")
    return dims


# ----------------------------------------------------------------------
# tensor products and partial traces
# ----------------------------------------------------------------------


def tensor_product(*factors) -> np.ndarray:
    """Kronecker product, leftmost factor outermost."""
    if not factors:
        raise ValueError("tensor_product needs at least one factor")
    mats = [as_matrix(f) for f in factors]
    return reduce(np.kron, mats)


def partial_trace(m, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out every tensor factor whose index is not in ``keep``.

    Kept factors retain their original relative order.
    """
    a = as_square(m)
    dims = check_dims(dims, a.shape[0])
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} factors")
    t = a.reshape(dims + dims)
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = list(letters[:n])
    cols = [letters[n + i] if i in keep else rows[i] for i in range(n)]
    out = [rows[i] for i in keep] + [cols[i] for i in keep]
    res = np.einsum("".join(rows) + "".join(cols) + "->" + "".join(out), t)
    kd = int(np.prod([dims[i] for i in keep])) if keep else 1
    return res.reshape(kd, kd)


# ----------------------------------------------------------------------
# eigendecomposition and functional calculus
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class HermitianEig:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self, values=None) -> np.ndarray:
        vals = self.eigenvalues if values is None else values
        u = self.eigenvectors
        return (u * vals) @ dag(u)


def degenerate_groups(values: np.ndarray, gap: float = DEGENERACY_GAP) -> list[np.ndarray]:
    """Split ascending ``values`` into clusters separated by more than
    ``gap`` times the spectral scale.

    The scale is the spectral diameter, floored at the spectral radius so
    that a numerically scalar spectrum stays one cluster.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    scale = max(values[-1] - values[0], np.abs(values).max())
    if scale <= 0:
        scale = 1.0
    cut = np.nonzero(np.diff(values) > gap * scale)[0] + 1
    return np.split(np.arange(values.size), cut)


def _fix_phases(vecs: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    vecs = vecs.copy()
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.nonzero(np.abs(col) > tol)[0]
        if nz.size:
            c = col[nz[0]]
            vecs[:, j] = col * (abs(c) / c)
    return vecs


def hermitian_eig(h, tol: float = HERMITIAN_TOL) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix with deterministic output.

    Eigenvalues ascend. Each eigenvector has its first nonzero entry real
    and positive; within a degenerate cluster the vectors are sorted
    lexicographically by their (real, imag) entries.
    """
    a = as_square(h)
    if not is_hermitian(a, tol):
        raise NotHermitianError(f"matrix is not Hermitian within {tol:g}")
    vals, vecs = np.linalg.eigh((a + dag(a)) / 2)
    vecs = _fix_phases(vecs)
    order = []
    for grp in degenerate_groups(vals):
        if grp.size == 1:
            order.extend(grp)
            continue
        keys = [tuple(np.round(np.column_stack([vecs[:, j].real, vecs[:, j].imag]).ravel(), 12))
                for j in grp]
        order.extend(grp[i] for i in sorted(range(grp.size), key=lambda i: keys[i]))
    order = np.asarray(order)
    return HermitianEig(vals[order], vecs[:, order])


def matrix_function(h, f: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """``U f(Lambda) U*`` for Hermitian ``h``; ``f`` acts on the eigenvalue array."""
    e = hermitian_eig(h)
    return e.reconstruct(np.asarray(f(e.eigenvalues), dtype=np.complex128))


def _positive_eig(h, eps: float | None) -> HermitianEig:
    e = hermitian_eig(h)
    thr = invertibility_eps(h, eps)
    if e.eigenvalues[0] <= thr:
        raise SingularMatrixError(
            f"eigenvalue {e.eigenvalues[0]:.3g} is not above the invertibility eps {thr:.3g}"
        )
    return e


def sqrtm_psd(h, tol: float = 1e-10) -> np.ndarray:
    """Positive square root; eigenvalues in ``[-tol, 0)`` are clipped to zero."""
    e = hermitian_eig(h)
    if e.eigenvalues[0] < -tol * max(1.0, abs(e.eigenvalues[-1])):
        raise InvalidInputError("sqrt of a matrix with a negative eigenvalue")
    return e.reconstruct(np.sqrt(np.clip(e.eigenvalues, 0.0, None)))


def inv_sqrtm(h, eps: float | None = None) -> np.ndarray:
    e = _positive_eig(h, eps)
    return e.reconstruct(1.0 / np.sqrt(e.eigenvalues))


def logm_pd(h, eps: float | None = None) -> np.ndarray:
    e = _positive_eig(h, eps)
    return e.reconstruct(np.log(e.eigenvalues))


def imaginary_power(h, t: float, eps: float | None = None) -> np.ndarray:
    """``h**(i t)`` for positive definite ``h``; a unitary."""
    e = _positive_eig(h, eps)
    return e.reconstruct(np.exp(1j * t * np.log(e.eigenvalues)))


# ----------------------------------------------------------------------
# inner products
# ----------------------------------------------------------------------


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``Tr a* b``."""
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def weighted_inner(a, b, d, eps: float | None = None) -> complex:
    """``Tr a* d^{1/2} b d^{1/2}`` for an invertible density ``d``."""
    d = require_invertible(d, eps)
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape or a.shape != d.shape:
        raise DimensionError("weighted_inner needs three matrices of equal shape")
    r = sqrtm_psd(d)
    return complex(np.vdot(a, r @ b @ r))


# ----------------------------------------------------------------------
# random generation
# ----------------------------------------------------------------------


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def ginibre(rows: int, cols: int, rng) -> np.ndarray:
    rng = as_rng(rng)
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def random_unitary(dim: int, rng) -> np.ndarray:
    """Haar-random unitary (QR of a Ginibre matrix with the R-phase fix)."""
    q, r = np.linalg.qr(ginibre(dim, dim, rng))
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(dim: int, rng, rank: int | None = None) -> np.ndarray:
    """Random density from the induced (Hilbert-Schmidt when rank=dim) measure."""
    g = ginibre(dim, dim if rank is None else rank, rng)
    d = g @ dag(g)
    d = (d + dag(d)) / 2
    return d / np.trace(d).real


def random_hermitian(dim: int, rng) -> np.ndarray:
    g = ginibre(dim, dim, rng)
    return (g + dag(g)) / 2
