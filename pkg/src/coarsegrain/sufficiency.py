"""Sufficiency of a coarse-graining for a pair of states.

A channel ``T`` is sufficient for ``(D1, D2)`` when some channel recovers
both states from their images. Two equivalent tests are implemented and
must agree:

* the cocycle identity ``T*(T(D2)^{it} T(D1)^{-it}) = D2^{it} D1^{-it}``
  evaluated on a grid of ``t``;
* recovery by the dual ``T#`` built from ``D1``.

For sufficient pairs :func:`extract_structure` splits ``T(D_s)`` over the
central blocks of the fixed-point algebra of ``alpha o T*`` as
``sum_p lambda_s(p) S_s(p) kron R(p)`` with ``R(p)`` independent of ``s``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg as la
from .algebra import (
    CLOSURE_TOL,
    DEFAULT_T_GRID,
    BlockStructure,
    StarAlgebra,
    block_structure,
    fixed_point_algebra,
)
from .channels import KrausMap, compose, petz_dual, require_channel, transpose_alpha
from .errors import (
    CriteriaDisagreementError,
    FactorizationError,
    InvalidInputError,
    NumericalBreakdownError,
    PreconditionError,
)


@dataclass(frozen=True)
class Config:
    """Tolerances and grids shared by the sufficiency and entropy analyses."""

    tol: float = 1e-8
    t_grid: tuple = DEFAULT_T_GRID
    closure_tol: float = CLOSURE_TOL
    seed: int = 0
    eps: float | None = None
    strict: bool = True


DEFAULT_CONFIG = Config()


# ----------------------------------------------------------------------
# criteria
# ----------------------------------------------------------------------


def gamma_maps(t: KrausMap, d1, eps: float | None = None) -> tuple[KrausMap, KrausMap]:
    """``(T* o alpha, alpha o T*)``, the unital maps on ``B(H)`` and ``B(K)``."""
    alpha = transpose_alpha(t, d1, eps)
    t_star = t.adjoint()
    return compose(t_star, alpha), compose(alpha, t_star)


def _check_inputs(t: KrausMap, d1, d2, eps):
    require_channel(t)
    d1 = la.require_invertible(la.check_density(d1, name="D1"), eps, "D1")
    d2 = la.require_invertible(la.check_density(d2, name="D2"), eps, "D2")
    if d1.shape[0] != t.in_dim or d2.shape[0] != t.in_dim:
        raise InvalidInputError("state dimension does not match the channel input")
    td1 = la.require_invertible(t(d1), eps, "T(D1)")
    td2 = la.require_invertible(t(d2), eps, "T(D2)")
    return d1, d2, td1, td2


def ns_deviations(t: KrausMap, d1, d2, t_grid=DEFAULT_T_GRID, eps=None) -> dict:
    """HS deviation of the cocycle identity at each grid point."""
    d1, d2, td1, td2 = _check_inputs(t, d1, d2, eps)
    t_star = t.adjoint()
    out = {}
    for s in t_grid:
        lhs = t_star(la.imaginary_power(td2, s, eps) @ la.imaginary_power(td1, -s, eps))
        rhs = la.imaginary_power(d2, s, eps) @ la.imaginary_power(d1, -s, eps)
        out[float(s)] = la.hs_norm(lhs - rhs)
    return out


def check_ns_condition(t: KrausMap, d1, d2, t_grid=DEFAULT_T_GRID, tol: float = 1e-8,
                       eps=None) -> tuple[bool, float]:
    dev = ns_deviations(t, d1, d2, t_grid, eps)
    worst = max(dev.values()) if dev else 0.0
    return worst < tol, worst


@dataclass(frozen=True)
class SufficiencyReport:
    ns_max_deviation: float
    recovery_deviation_1: float
    recovery_deviation_2: float
    t_grid: tuple
    tol: float

    @property
    def ns_verdict(self) -> bool:
        return self.ns_max_deviation < self.tol

    @property
    def recovery_verdict(self) -> bool:
        return max(self.recovery_deviation_1, self.recovery_deviation_2) < self.tol

    @property
    def verdict(self) -> bool:
        return self.ns_verdict and self.recovery_verdict

    @property
    def consistent(self) -> bool:
        return self.ns_verdict == self.recovery_verdict


def check_sufficiency(t: KrausMap, d1, d2, config: Config = DEFAULT_CONFIG) -> SufficiencyReport:
    """Evaluate both sufficiency criteria.

    Raises :class:`CriteriaDisagreementError` (carrying the report) when the
    two verdicts differ and ``config.strict`` is set.
    """
    d1, d2, _, _ = _check_inputs(t, d1, d2, config.eps)
    recovery = petz_dual(t, d1, config.eps)
    rec1 = la.hs_norm(recovery(t(d1)) - d1)
    rec2 = la.hs_norm(recovery(t(d2)) - d2)
    dev = ns_deviations(t, d1, d2, config.t_grid, config.eps)
    rep = SufficiencyReport(
        ns_max_deviation=max(dev.values()) if dev else 0.0,
        recovery_deviation_1=rec1,
        recovery_deviation_2=rec2,
        t_grid=tuple(float(s) for s in config.t_grid),
        tol=config.tol,
    )
    if config.strict and not rep.consistent:
        raise CriteriaDisagreementError(
            f"cocycle criterion ({rep.ns_max_deviation:.3e}) and recovery criterion "
            f"({max(rec1, rec2):.3e}) disagree at tol {config.tol:g}",
            report=rep,
        )
    return rep


# ----------------------------------------------------------------------
# structure
# ----------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DecompositionBlock:
    """One central summand.

    ``S_1``, ``S_2`` (``d x d``) and ``R`` (``m x m``) are the normalized
    factors in the block basis ``V``. ``S_1_op``, ``S_2_op``, ``R_op`` are the
    corresponding operators on the decomposition's Hilbert space, so that
    ``T(D_s)`` (or ``D_s``) is ``sum_p lambda_s(p) S_s_op(p) R_op(p)``.
    """

    d: int
    m: int
    z: np.ndarray
    q: np.ndarray
    lambda_1: float
    lambda_2: float
    S_1: np.ndarray
    S_2: np.ndarray
    R: np.ndarray
    V: np.ndarray
    S_1_op: np.ndarray
    S_2_op: np.ndarray
    R_op: np.ndarray
    residual: float = 0.0

    def weight(self, s: int) -> float:
        return (self.lambda_1, self.lambda_2)[s - 1]

    def s_op(self, s: int) -> np.ndarray:
        return (self.S_1_op, self.S_2_op)[s - 1]


@dataclass(frozen=True, eq=False)
class SufficiencyDecomposition:
    blocks: tuple
    side: str
    algebra: StarAlgebra | None = field(default=None, repr=False)
    structure: BlockStructure | None = field(default=None, repr=False)

    @property
    def shapes(self) -> list[tuple[int, int]]:
        return [(b.d, b.m) for b in self.blocks]

    def weights(self, s: int) -> np.ndarray:
        return np.array([b.weight(s) for b in self.blocks])

    def reconstruct(self, s: int) -> np.ndarray:
        return sum(b.weight(s) * b.s_op(s) @ b.R_op for b in self.blocks)


def _factor(c: np.ndarray, d: int, m: int) -> tuple[np.ndarray, np.ndarray, float]:
    left = la.partial_trace(c, (d, m), keep=[0])
    right = la.partial_trace(c, (d, m), keep=[1])
    return left, right, la.hs_norm(c - np.kron(left, right))


def extract_structure(t: KrausMap, d1, d2, config: Config = DEFAULT_CONFIG,
                      report: SufficiencyReport | None = None) -> SufficiencyDecomposition:
    """Factor ``T(D1)``, ``T(D2)`` over the central blocks of ``D_K``.

    ``D_K`` is the fixed-point algebra of ``alpha o T*``. Blocks come in
    canonical order: descending ``lambda_1``, ties by descending ``d``.
    """
    rep = report if report is not None else check_sufficiency(t, d1, d2, config)
    if not rep.verdict:
        raise PreconditionError("structure is only defined for sufficient pairs")
    d1 = la.check_density(d1, name="D1")
    d2 = la.check_density(d2, name="D2")
    td = (t(d1), t(d2))
    _, gamma_k = gamma_maps(t, d1, config.eps)
    dk = fixed_point_algebra(gamma_k, td[0], tol=config.closure_tol)
    bs = block_structure(dk, config.seed, tol=config.closure_tol)
    t_star = t.adjoint()

    blocks = []
    for p, b in enumerate(bs.blocks):
        lam, s_fac, r_fac = [], [], []
        worst = 0.0
        for x in td:
            w = float(np.trace(b.z @ x).real)
            c = b.compress(x) / w
            s_, r_, res = _factor(c, b.d, b.m)
            lam.append(w)
            s_fac.append((s_ + la.dag(s_)) / 2)
            r_fac.append((r_ + la.dag(r_)) / 2)
            worst = max(worst, res)
        if worst > config.tol:
            raise FactorizationError(
                f"block {p} ({b.d}x{b.m}) is not of product form (residual {worst:.2e})",
                block=p, residual=worst,
            )
        r_gap = la.hs_norm(r_fac[0] - r_fac[1])
        if r_gap > config.tol:
            raise FactorizationError(
                f"block {p}: commutant factors differ between the states ({r_gap:.2e})",
                block=p, residual=r_gap,
            )
        r_common = (r_fac[0] + r_fac[1]) / 2
        blocks.append(DecompositionBlock(
            d=b.d, m=b.m, z=b.z, q=t_star(b.z),
            lambda_1=lam[0], lambda_2=lam[1],
            S_1=s_fac[0], S_2=s_fac[1], R=r_common, V=b.V,
            S_1_op=b.embed(s_fac[0]), S_2_op=b.embed(s_fac[1]),
            R_op=b.embed_commutant(r_common),
            residual=max(worst, r_gap),
        ))
    blocks.sort(key=lambda blk: (-blk.lambda_1, -blk.d))
    dec = SufficiencyDecomposition(tuple(blocks), "K", dk, bs)
    for s in (1, 2):
        err = la.hs_norm(dec.reconstruct(s) - td[s - 1])
        if err > config.tol:
            raise FactorizationError(f"reconstruction of T(D{s}) off by {err:.2e}", residual=err)
    return dec


def pull_back_structure(t: KrausMap, decomp: SufficiencyDecomposition, d1, d2=None,
                        config: Config = DEFAULT_CONFIG) -> SufficiencyDecomposition:
    """Transport a ``K``-side decomposition to ``H``.

    ``q_p = T*(z_p)``, ``S_s^H(p) = T*(S_s(p))`` and ``R^H(p) = T#(R(p))``.
    Checks that the ``q_p`` are orthogonal projections, that ``S_s^H`` and
    ``R^H`` commute, and that the factors reassemble ``D_s`` (``D2`` is
    taken as ``T#(T(D2))`` unless given).
    """
    if decomp.side != "K":
        raise InvalidInputError("pull_back_structure expects a K-side decomposition")
    d1 = la.check_density(d1, name="D1")
    recovery = petz_dual(t, d1, config.eps)
    t_star = t.adjoint()
    targets = {1: d1, 2: d2 if d2 is not None else recovery(decomp.reconstruct(2))}

    blocks = []
    for b in decomp.blocks:
        q = t_star(b.z)
        s1 = t_star(b.S_1_op)
        s2 = t_star(b.S_2_op)
        r = recovery(b.R_op)
        if la.hs_norm(q @ q - q) > config.closure_tol * max(1.0, la.hs_norm(q)):
            raise NumericalBreakdownError("pulled-back central element is not a projection")
        comm = max(la.hs_norm(s @ r - r @ s) for s in (s1, s2))
        if comm > config.closure_tol:
            raise NumericalBreakdownError(f"pulled-back factors fail to commute ({comm:.2e})")
        blocks.append(DecompositionBlock(
            d=b.d, m=b.m, z=q, q=q, lambda_1=b.lambda_1, lambda_2=b.lambda_2,
            S_1=b.S_1, S_2=b.S_2, R=b.R, V=b.V, S_1_op=s1, S_2_op=s2, R_op=r,
            residual=comm,
        ))
    for i, a in enumerate(blocks):
        for c in blocks[i + 1:]:
            if la.hs_norm(a.q @ c.q) > config.closure_tol:
                raise NumericalBreakdownError("pulled-back projections are not orthogonal")
    dec = SufficiencyDecomposition(tuple(blocks), "H")
    for s in (1, 2):
        err = la.hs_norm(dec.reconstruct(s) - targets[s])
        if err > config.tol:
            raise NumericalBreakdownError(f"pulled-back reconstruction of D{s} off by {err:.2e}")
    return dec


def cocycle_distances(t: KrausMap, d1, d2, algebra: StarAlgebra,
                      t_grid=DEFAULT_T_GRID, eps=None) -> dict:
    """Distance of ``T(D1)^{it} T(D2)^{-it}`` from ``algebra`` per grid point."""
    td1, td2 = t(d1), t(d2)
    return {float(s): algebra.distance(la.imaginary_power(td1, s, eps)
                                       @ la.imaginary_power(td2, -s, eps))
            for s in t_grid}


# ----------------------------------------------------------------------
# synthesis
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class InstanceSpec:
    """Recipe for a sufficient instance.

    ``blocks`` lists ``(d_p, m_p)``; ``weights`` holds one probability vector
    per state; ``ancilla`` is the dimension traced out in each block (an int
    or one per block). ``mismatched_R`` gives every state its own commutant
    factor, which generically destroys sufficiency (a negative control).
    """

    blocks: tuple
    weights: tuple
    ancilla: object = 2
    seed: int = 0
    rotate: bool = True
    mismatched_R: bool = False

    def validate(self) -> "InstanceSpec":
        blocks = tuple((int(d), int(m)) for d, m in self.blocks)
        if not blocks or any(d < 1 or m < 1 for d, m in blocks):
            raise InvalidInputError("block shapes must be positive (d, m) pairs")
        if len(self.weights) < 2:
            raise InvalidInputError("at least two weight vectors (states) are required")
        for w in self.weights:
            w = np.asarray(w, dtype=float)
            if w.shape != (len(blocks),):
                raise InvalidInputError("each weight vector needs one entry per block")
            if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
                raise InvalidInputError("weights must be positive and sum to 1")
        anc = self.ancillas(len(blocks))
        if any(a < 1 for a in anc):
            raise InvalidInputError("ancilla dimensions must be positive")
        return self

    def ancillas(self, r: int) -> tuple:
        if isinstance(self.ancilla, (int, np.integer)):
            return (int(self.ancilla),) * r
        anc = tuple(int(a) for a in self.ancilla)
        if len(anc) != r:
            raise InvalidInputError("one ancilla dimension per block required")
        return anc


@dataclass(frozen=True, eq=False)
class SynthesizedInstance:
    channel: KrausMap
    states: tuple
    spec: InstanceSpec
    S: tuple            # S[s][p]
    R: tuple            # R[s][p], K-side commutant factors
    u_in: np.ndarray
    u_out: np.ndarray

    @property
    def d1(self) -> np.ndarray:
        return self.states[0]

    @property
    def d2(self) -> np.ndarray:
        return self.states[1]


def synthesize_sufficient_instance(spec: InstanceSpec) -> SynthesizedInstance:
    """Build ``(T, D_1, ..., D_k)`` with ``T`` sufficient by construction.

    Block ``p`` of ``H`` is ``C^d kron C^m kron C^a``; ``D_s`` restricted to it
    is ``lambda_s(p) S_s(p) kron Rh(p)`` with ``Rh(p)`` shared by all states.
    ``T`` kills off-diagonal blocks and traces out the ``a`` leg, then both
    spaces are rotated by random unitaries when ``spec.rotate`` is set.
    """
    spec.validate()
    rng = la.as_rng(spec.seed)
    shapes = tuple((int(d), int(m)) for d, m in spec.blocks)
    anc = spec.ancillas(len(shapes))
    n_states = len(spec.weights)
    h_sizes = [d * m * a for (d, m), a in zip(shapes, anc)]
    k_sizes = [d * m for d, m in shapes]
    dim_h, dim_k = sum(h_sizes), sum(k_sizes)
    h_off = np.concatenate([[0], np.cumsum(h_sizes)])
    k_off = np.concatenate([[0], np.cumsum(k_sizes)])

    s_fac = [[la.random_density(d, rng) for d, _ in shapes] for _ in range(n_states)]
    n_r = n_states if spec.mismatched_R else 1
    rh = [[la.random_density(m * a, rng) for (_, m), a in zip(shapes, anc)] for _ in range(n_r)]
    r_fac = [[la.partial_trace(x, (m, a), keep=[0]) for x, (_, m), a in zip(row, shapes, anc)]
             for row in rh]

    states = []
    for s in range(n_states):
        dm = np.zeros((dim_h, dim_h), dtype=np.complex128)
        for p, (d, m) in enumerate(shapes):
            blk = spec.weights[s][p] * np.kron(s_fac[s][p], rh[s if spec.mismatched_R else 0][p])
            dm[h_off[p]:h_off[p + 1], h_off[p]:h_off[p + 1]] = blk
        states.append(dm)

    coeffs = []
    for p, ((d, m), a) in enumerate(zip(shapes, anc)):
        for k in range(a):
            bra = np.zeros((1, a))
            bra[0, k] = 1.0
            local = np.kron(np.eye(d * m), bra)
            op = np.zeros((dim_k, dim_h), dtype=np.complex128)
            op[k_off[p]:k_off[p + 1], h_off[p]:h_off[p + 1]] = local
            coeffs.append(op)

    if spec.rotate:
        u_in, u_out = la.random_unitary(dim_h, rng), la.random_unitary(dim_k, rng)
    else:
        u_in, u_out = np.eye(dim_h, dtype=np.complex128), np.eye(dim_k, dtype=np.complex128)
    channel = KrausMap(tuple(u_out @ c @ la.dag(u_in) for c in coeffs))
    states = tuple(u_in @ x @ la.dag(u_in) for x in states)
    states = tuple((x + la.dag(x)) / 2 for x in states)
    return SynthesizedInstance(
        channel=channel,
        states=states,
        spec=spec,
        S=tuple(tuple(row) for row in s_fac),
        R=tuple(tuple(row) for row in r_fac),
        u_in=u_in,
        u_out=u_out,
    )


def random_instance(in_dim: int, out_dim: int, n_kraus: int, seed) -> tuple:
    """Random channel and two random full-rank states; generically not sufficient."""
    from .channels import random_channel

    rng = la.as_rng(seed)
    t = random_channel(in_dim, out_dim, n_kraus, rng)
    return t, la.random_density(in_dim, rng), la.random_density(in_dim, rng)


def canonical_shapes(shapes: Sequence[tuple[int, int]], weights: Sequence[float]) -> list:
    """Block shapes sorted into the canonical order (descending weight, then ``d``)."""
    order = sorted(range(len(shapes)), key=lambda p: (-weights[p], -shapes[p][0]))
    return [tuple(shapes[p]) for p in order]
