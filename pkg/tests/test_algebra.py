import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coarsegrain import linalg as la
from coarsegrain.algebra import (
    StarAlgebra, block_diagonal_algebra, block_structure, center, check_modular_stability,
    conditional_expectation, diagonal_algebra, factor_tensor_unitary, fixed_point_algebra,
    full_algebra, in_multiplicative_domain, unitary_block_analysis,
)
from coarsegrain.channels import KrausMap, dephasing_channel, random_channel
from coarsegrain.errors import FactorizationError, InvalidInputError, PreconditionError
from coarsegrain.sufficiency import InstanceSpec, gamma_maps, synthesize_sufficient_instance

WORKED_SHAPES = [(2, 2), (2, 2), (3, 2), (1, 4)]


def rotated(a: StarAlgebra, u) -> StarAlgebra:
    return StarAlgebra.from_span(np.einsum("ab,kbc,cd->kad", u, a.basis, u.conj().T))


def swap(d):
    s = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            s[i * d + j, j * d + i] = 1.0
    return s


class TestStarAlgebra:
    def test_span_projection(self):
        a = diagonal_algebra(3)
        x = la.ginibre(3, 3, 0)
        assert np.allclose(a.project(x), np.diag(np.diag(x)))
        assert np.isclose(a.distance(x), la.hs_norm(x - np.diag(np.diag(x))))

    def test_closure_rejects_non_algebra(self):
        x = np.array([[0, 1], [1, 0]], dtype=complex)
        e00 = np.diag([1.0, 0.0]).astype(complex)
        span = StarAlgebra.from_span(np.array([np.eye(2), x, e00]))
        with pytest.raises(PreconditionError):
            span.check_closure()

    def test_center_of_block_algebra(self):
        a = block_diagonal_algebra([(2, 1), (1, 2)])
        assert center(a).shape[0] == 2


class TestBlockStructure:
    def test_full_algebra_is_one_block(self):
        assert block_structure(full_algebra(3)).shapes == [(3, 1)]

    def test_diagonal_algebra_is_all_scalars(self):
        assert block_structure(diagonal_algebra(4)).shapes == [(1, 1)] * 4

    def test_worked_example(self):
        a = block_diagonal_algebra(WORKED_SHAPES)
        bs = block_structure(a)
        assert sorted(bs.shapes) == sorted(WORKED_SHAPES)
        assert sum(d * d for d, _ in bs.shapes) == a.dim
        assert a.ambient_dim == sum(d * m for d, m in WORKED_SHAPES)

    @settings(max_examples=10, deadline=None)
    @given(shapes=st.lists(st.tuples(st.integers(1, 3), st.integers(1, 3)), min_size=1, max_size=3),
           seed=st.integers(0, 1000))
    def test_shapes_survive_a_basis_rotation(self, shapes, seed):
        a = block_diagonal_algebra(shapes)
        b = rotated(a, la.random_unitary(a.ambient_dim, seed))
        bs = block_structure(b, seed=seed)
        assert sorted(bs.shapes) == sorted(shapes)
        assert la.hs_norm(sum(blk.z for blk in bs.blocks) - np.eye(a.ambient_dim)) < 1e-9
        # every algebra element is recovered from its compressions
        x = sum(la.random_hermitian(1, seed)[0, 0].real * e for e in b.basis[:1]) + b.basis[-1]
        parts = [la.partial_trace(blk.compress(x), (blk.d, blk.m), [0]) / blk.m for blk in bs.blocks]
        assert np.allclose(bs.assemble(parts), x)

    def test_same_seed_same_isometries(self):
        a = rotated(block_diagonal_algebra([(2, 2), (1, 3)]), la.random_unitary(7, 3))
        b1, b2 = block_structure(a, seed=5), block_structure(a, seed=5)
        assert all(np.array_equal(x.V, y.V) for x, y in zip(b1.blocks, b2.blocks))


class TestFixedPoints:
    def test_dephasing_fixed_points_are_diagonal(self):
        a = fixed_point_algebra(dephasing_channel(3), np.eye(3) / 3)
        assert a.dim == 3
        assert block_structure(a).shapes == [(1, 1)] * 3

    def test_non_unital_map_rejected(self):
        t = random_channel(2, 2, 2, 1)
        with pytest.raises(PreconditionError):
            fixed_point_algebra(t, np.eye(2) / 2)

    def test_mean_ergodic_average_lands_in_fixed_points(self):
        inst = synthesize_sufficient_instance(
            InstanceSpec(blocks=((2, 1), (1, 2)), weights=((0.4, 0.6), (0.7, 0.3)), seed=2))
        gamma_h, _ = gamma_maps(inst.channel, inst.d1)
        alg = fixed_point_algebra(gamma_h, inst.d1)
        # Cesaro mean (1/N) sum_{k<N} S^k with N = 2^40, built by doubling
        s = gamma_h.superoperator()
        power, mean = s, (np.eye(s.shape[0]) + s) / 2
        for _ in range(39):
            power = power @ power
            mean = mean @ (np.eye(s.shape[0]) + power) / 2
        n = inst.d1.shape[0]
        images = mean.T.reshape(-1, n, n)       # mean applied to each matrix unit
        assert alg.distances(images).max() < 1e-8
        assert alg.distances(alg.basis).max() < 1e-12
        assert np.linalg.matrix_rank(mean, tol=1e-6) == alg.dim


class TestModularStability:
    def test_tracial_state_is_always_stable(self):
        a = block_diagonal_algebra([(2, 1), (1, 2)])
        rep = check_modular_stability(a, np.eye(4) / 4)
        assert rep.stable and rep.max_distance < 1e-12

    def test_diagonal_algebra_with_diagonal_state(self):
        rep = check_modular_stability(diagonal_algebra(3), np.diag([0.2, 0.3, 0.5]))
        assert rep.stable

    def test_diagonal_algebra_with_generic_state_is_unstable(self):
        rep = check_modular_stability(diagonal_algebra(3), la.random_density(3, 0))
        assert not rep.stable and rep.max_distance > 1e-3


class TestConditionalExpectation:
    def setup_method(self):
        u = la.random_unitary(6, 11)
        self.alg = rotated(block_diagonal_algebra([(2, 1), (1, 2), (1, 2)]), u)
        bs = block_structure(self.alg)
        # d = sum_p w_p V (s_p kron r_p) V*, stable by construction
        rng = np.random.default_rng(12)
        d = sum(w * b.V @ np.kron(la.random_density(b.d, rng), la.random_density(b.m, rng))
                @ b.V.conj().T for w, b in zip((0.5, 0.3, 0.2), bs.blocks))
        self.d = (d + d.conj().T) / 2

    def test_projection_properties(self):
        e = conditional_expectation(self.alg, self.d)
        x = la.ginibre(6, 6, 13)
        ex = e(x)
        assert self.alg.distance(ex) < 1e-9
        assert np.allclose(e(ex), ex)
        assert np.allclose(e(np.eye(6)), np.eye(6))
        assert np.isclose(np.trace(self.d @ ex), np.trace(self.d @ x))

    def test_bimodule_property(self):
        e = conditional_expectation(self.alg, self.d)
        a, b = self.alg.basis[1], self.alg.basis[-1]
        x = la.ginibre(6, 6, 14)
        assert np.allclose(e(a @ x @ b), a @ e(x) @ b)

    def test_requires_stability(self):
        with pytest.raises(PreconditionError):
            conditional_expectation(diagonal_algebra(3), la.random_density(3, 0))


class TestMultiplicativeDomain:
    def test_dephasing(self):
        t = dephasing_channel(2)
        assert in_multiplicative_domain(t, np.diag([1.0, 2.0]))
        assert not in_multiplicative_domain(t, np.array([[0, 1], [1, 0]], dtype=complex))


class TestUnitaryFactorization:
    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 10**6), d=st.integers(1, 3), m=st.integers(1, 3))
    def test_recovers_product(self, seed, d, m):
        rng = np.random.default_rng(seed)
        u = np.kron(la.random_unitary(d, rng), la.random_unitary(m, rng))
        f = factor_tensor_unitary(u, d, m)
        assert la.hs_norm(np.kron(f.v, f.w) - u) < 1e-9
        assert la.is_unitary(f.v) and la.is_unitary(f.w)

    def test_swap_is_rejected(self):
        with pytest.raises(PreconditionError):
            factor_tensor_unitary(swap(2), 2, 2)

    def test_non_unitary_rejected(self):
        with pytest.raises(PreconditionError):
            factor_tensor_unitary(2 * np.eye(4), 2, 2)


class TestUnitaryBlockAnalysis:
    def test_swapping_equal_blocks(self):
        a = block_diagonal_algebra([(2, 1), (2, 1)])
        u = np.zeros((4, 4))
        u[:2, 2:] = u[2:, :2] = np.eye(2)
        rep = unitary_block_analysis(u, a)
        assert rep.block_permutation == (1, 0)
        assert rep.commutes_with_Pm and rep.commutes_with_Pd

    def test_block_diagonal_unitary_fixes_blocks(self):
        a = block_diagonal_algebra([(2, 1), (1, 2)])
        u = np.zeros((4, 4), dtype=complex)
        u[:2, :2] = la.random_unitary(2, 1)
        u[2:, 2:] = la.random_unitary(2, 2)
        rep = unitary_block_analysis(u, a)
        assert rep.block_permutation == (0, 1)
        assert rep.commutes_with_Pd

    def test_unitary_leaving_the_algebra_rejected(self):
        with pytest.raises(PreconditionError):
            unitary_block_analysis(la.random_unitary(3, 0), diagonal_algebra(3))

    def test_kraus_input(self):
        assert isinstance(dephasing_channel(2), KrausMap)
        assert FactorizationError.__mro__  # error type importable for callers
