"""Von Neumann entropy, relative entropy and equality in strong subadditivity.

All entropies are in nats. A tripartite state saturating strong
subadditivity is a Markov state: ``H_B`` splits into orthogonal pieces
``C^{bL} kron C^{bR}`` and the state is a weighted sum of
``left(A, bL) kron right(bR, C)`` over these pieces.
:func:`ssa_equality_structure` recovers that decomposition through the
sufficiency of the partial trace over ``C`` for ``(tau_A kron D_BC, D_ABC)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import linalg as la
from .algebra import StarAlgebra, block_structure, fixed_point_algebra
from .channels import partial_trace_channel
from .errors import DimensionError, FactorizationError, InvalidInputError, PreconditionError
from .sufficiency import DEFAULT_CONFIG, Config, check_sufficiency, gamma_maps

SSA_TOL = 1e-8
_ZERO_EIG = 1e-15


def von_neumann_entropy(d, tol: float = 1e-10) -> float:
    d = la.check_density(d, tol)
    vals = np.linalg.eigvalsh(d)
    vals = vals[vals > _ZERO_EIG]
    return float(-np.sum(vals * np.log(vals)))


def relative_entropy(d, e, tol: float = 1e-10, support_tol: float = 1e-12) -> float:
    """``Tr d (log d - log e)``; ``inf`` when ``supp d`` is not inside ``supp e``."""
    d = la.check_density(d, tol, "d")
    e = la.check_density(e, tol, "e")
    if d.shape != e.shape:
        raise DimensionError("relative entropy of states on different spaces")
    p, u = np.linalg.eigh(d)
    q, v = np.linalg.eigh(e)
    overlap = np.abs(la.dag(u) @ v) ** 2        # |<u_i|v_j>|^2
    null_q = q <= support_tol * max(q[-1], 1.0)
    pos_p = p > _ZERO_EIG
    if np.sum(p[pos_p] @ overlap[pos_p][:, null_q]) > support_tol:
        return float("inf")
    pp = p[pos_p]
    cross = pp @ overlap[pos_p][:, ~null_q] @ np.log(q[~null_q])
    return float(np.sum(pp * np.log(pp)) - cross)


@dataclass(frozen=True, eq=False)
class TripartiteState:
    density: np.ndarray
    dims: tuple

    def __post_init__(self):
        dims = la.check_dims(self.dims)
        if len(dims) != 3:
            raise DimensionError("a tripartite state needs exactly three factor dimensions")
        d = la.as_square(self.density, "density")
        la.check_dims(dims, d.shape[0])
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "density", la.check_density(d))

    def reduced(self, keep: Sequence[int]) -> np.ndarray:
        return la.partial_trace(self.density, self.dims, keep)

    @property
    def d_ab(self):
        return self.reduced([0, 1])

    @property
    def d_bc(self):
        return self.reduced([1, 2])

    @property
    def d_b(self):
        return self.reduced([1])


def ssa_gap(s: TripartiteState) -> float:
    """``S(AB) + S(BC) - S(ABC) - S(B)``; nonnegative up to rounding."""
    ent = von_neumann_entropy
    return ent(s.d_ab) + ent(s.d_bc) - ent(s.density) - ent(s.d_b)


def _tau(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128) / n


def ssa_gap_via_relative_entropy(s: TripartiteState) -> tuple[float, float]:
    """``(S(D_ABC || tau_A kron D_BC), S(D_AB || tau_A kron D_B))``; lhs - rhs is the gap."""
    d_a = s.dims[0]
    lhs = relative_entropy(s.density, np.kron(_tau(d_a), s.d_bc))
    rhs = relative_entropy(s.d_ab, np.kron(_tau(d_a), s.d_b))
    return lhs, rhs


def markov_pair(s: TripartiteState):
    """``(T, D1, D2)`` = (trace over C, ``tau_A kron D_BC``, ``D_ABC``)."""
    t = partial_trace_channel(s.dims, traced=[2])
    d1 = np.kron(_tau(s.dims[0]), s.d_bc)
    return t, d1, s.density


# ----------------------------------------------------------------------
# Markov decomposition
# ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MarkovTerm:
    weight: float
    left: np.ndarray                # on H_A kron C^{bL}
    right: np.ndarray               # on C^{bR} kron H_C
    middle_isometry: np.ndarray     # C^{bL} kron C^{bR} -> H_B
    bL: int
    bR: int


@dataclass(frozen=True, eq=False)
class MarkovDecomposition:
    terms: tuple
    dims: tuple

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [(t.bL, t.bR) for t in self.terms]

    @property
    def weights(self) -> np.ndarray:
        return np.array([t.weight for t in self.terms])

    def term_operator(self, term: MarkovTerm) -> np.ndarray:
        """``(I_A kron V kron I_C)(left kron right)(I_A kron V kron I_C)*``."""
        d_a, _, d_c = self.dims
        w = np.kron(np.kron(np.eye(d_a), term.middle_isometry), np.eye(d_c))
        return w @ np.kron(term.left, term.right) @ la.dag(w)

    def reassemble(self) -> np.ndarray:
        return sum(t.weight * self.term_operator(t) for t in self.terms)

    def middle_overlap(self) -> float:
        """Largest ``||V_i* V_j||`` over distinct terms (0 for orthogonal ranges)."""
        worst = 0.0
        for i, a in enumerate(self.terms):
            for b in self.terms[i + 1:]:
                worst = max(worst, la.hs_norm(la.dag(a.middle_isometry) @ b.middle_isometry))
        return worst


@dataclass(frozen=True)
class MarkovSpec:
    """``blocks`` holds ``(bL, bR, weight)``; ``d_B`` is ``sum bL * bR``.

    With ``rotate`` the middle system is additionally rotated by a random
    unitary, so the blocks no longer sit on contiguous basis vectors.
    """

    d_A: int
    d_C: int
    blocks: tuple
    seed: int = 0
    rotate: bool = False

    @property
    def d_B(self) -> int:
        return sum(int(bl) * int(br) for bl, br, _ in self.blocks)

    def validate(self) -> "MarkovSpec":
        if self.d_A < 1 or self.d_C < 1 or not self.blocks:
            raise InvalidInputError("d_A, d_C must be positive and blocks nonempty")
        if any(int(bl) < 1 or int(br) < 1 or w <= 0 for bl, br, w in self.blocks):
            raise InvalidInputError("block dims must be positive and weights > 0")
        total = sum(w for _, _, w in self.blocks)
        if abs(total - 1.0) > 1e-9:
            raise InvalidInputError(f"block weights sum to {total}, expected 1")
        return self


def build_markov_state(spec: MarkovSpec) -> TripartiteState:
    """Assemble ``sum_i w_i left_i kron right_i`` with orthogonal middle blocks."""
    spec.validate()
    rng = la.as_rng(spec.seed)
    d_a, d_c, d_b = int(spec.d_A), int(spec.d_C), spec.d_B
    u_b = la.random_unitary(d_b, rng) if spec.rotate else np.eye(d_b, dtype=np.complex128)
    dims = (d_a, d_b, d_c)
    terms = []
    offset = 0
    for bl, br, w in spec.blocks:
        bl, br = int(bl), int(br)
        v = u_b[:, offset:offset + bl * br]
        offset += bl * br
        terms.append(MarkovTerm(float(w), la.random_density(d_a * bl, rng),
                                la.random_density(br * d_c, rng), v, bl, br))
    rho = MarkovDecomposition(tuple(terms), dims).reassemble()
    return TripartiteState((rho + la.dag(rho)) / 2, dims)


def random_tripartite_state(dims: Sequence[int], seed) -> TripartiteState:
    dims = la.check_dims(dims)
    return TripartiteState(la.random_density(int(np.prod(dims)), seed), dims)


def _sandwich_defects(dh: StarAlgebra, dims) -> tuple[float, float]:
    d_a, d_b, d_c = dims
    lower = 0.0
    for j in range(d_a):
        for k in range(d_a):
            e = np.zeros((d_a, d_a), dtype=np.complex128)
            e[j, k] = 1.0
            lower = max(lower, dh.distance(la.tensor_product(e, np.eye(d_b * d_c))))
    upper = 0.0
    for x in dh.basis:
        ab = la.partial_trace(x, dims, keep=[0, 1]) / d_c
        upper = max(upper, la.hs_norm(x - np.kron(ab, np.eye(d_c))))
    return lower, upper


def middle_algebra(s: TripartiteState, config: Config = DEFAULT_CONFIG):
    """``(D_H, A_B)`` for the partial trace over ``C`` and ``(tau_A kron D_BC, D_ABC)``.

    Checks ``B(H_A) kron 1 kron 1 <= D_H <= B(H_A) kron B(H_B) kron 1`` and
    ``D_H = B(H_A) kron A_B kron 1``.
    """
    t, d1, _ = markov_pair(s)
    la.require_invertible(d1, config.eps, "tau_A kron D_BC")
    la.require_invertible(t(d1), config.eps, "tau_A kron D_B")
    gamma_h, _ = gamma_maps(t, d1, config.eps)
    dh = fixed_point_algebra(gamma_h, d1, tol=config.closure_tol)
    lower, upper = _sandwich_defects(dh, s.dims)
    if max(lower, upper) > config.tol:
        raise FactorizationError(
            f"fixed-point algebra is not sandwiched between B(H_A) and B(H_A x H_B) "
            f"(defects {lower:.2e}, {upper:.2e})"
        )
    d_a, _, d_c = s.dims
    reduced = np.array([la.partial_trace(x, s.dims, keep=[1]) / (d_a * d_c) for x in dh.basis])
    a_b = StarAlgebra.from_span(reduced, tol=config.closure_tol).check_closure(config.closure_tol)
    if dh.dim != d_a * d_a * a_b.dim:
        raise FactorizationError(
            f"fixed-point algebra of dimension {dh.dim} is not B(H_A) x A_B "
            f"with dim A_B = {a_b.dim}"
        )
    return dh, a_b


def ssa_equality_structure(s: TripartiteState, tol: float = SSA_TOL,
                           config: Config = DEFAULT_CONFIG) -> MarkovDecomposition:
    """Markov decomposition of a state with vanishing SSA gap.

    Terms come in canonical order: descending weight, ties by descending ``bL``.
    """
    gap = ssa_gap(s)
    if gap >= tol:
        raise PreconditionError(f"SSA gap {gap:.3e} is not below {tol:g}; no Markov structure")
    _, a_b = middle_algebra(s, config)
    bs = block_structure(a_b, config.seed, tol=config.closure_tol)
    d_a, _, d_c = s.dims
    terms = []
    for p, b in enumerate(bs.blocks):
        w = np.kron(np.kron(np.eye(d_a), b.V), np.eye(d_c))
        c = la.dag(w) @ s.density @ w
        weight = float(np.trace(c).real)
        c = c / weight
        sub = (d_a, b.d, b.m, d_c)
        left = la.partial_trace(c, sub, keep=[0, 1])
        right = la.partial_trace(c, sub, keep=[2, 3])
        res = la.hs_norm(c - np.kron(left, right))
        if res > config.tol:
            raise FactorizationError(
                f"middle block {p} ({b.d}x{b.m}) does not factor (residual {res:.2e})",
                block=p, residual=res,
            )
        terms.append(MarkovTerm(weight, (left + la.dag(left)) / 2, (right + la.dag(right)) / 2,
                                b.V, b.d, b.m))
    terms.sort(key=lambda t: (-t.weight, -t.bL))
    dec = MarkovDecomposition(tuple(terms), s.dims)
    err = la.hs_norm(dec.reassemble() - s.density)
    if err > config.tol:
        raise FactorizationError(f"Markov decomposition reassembles with error {err:.2e}",
                                 residual=err)
    return dec


def ssa_sufficiency_report(s: TripartiteState, config: Config = DEFAULT_CONFIG):
    """Sufficiency report for the partial trace over ``C`` and ``(tau_A kron D_BC, D_ABC)``."""
    t, d1, d2 = markov_pair(s)
    return check_sufficiency(t, d1, d2, config)
