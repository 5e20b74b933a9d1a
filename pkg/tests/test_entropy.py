import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from coarsegrain import linalg as la
from coarsegrain.entropy import (
    MarkovSpec, TripartiteState, build_markov_state, markov_pair, middle_algebra,
    random_tripartite_state, relative_entropy, ssa_equality_structure, ssa_gap,
    ssa_gap_via_relative_entropy, ssa_sufficiency_report, von_neumann_entropy,
)
from coarsegrain.errors import DimensionError, InvalidInputError, PreconditionError

MARKOV = MarkovSpec(d_A=2, d_C=2, blocks=((2, 1, 0.5), (1, 2, 0.5)), seed=7)


def scipy_relative_entropy(d, e):
    return float(np.trace(d @ (scipy.linalg.logm(d) - scipy.linalg.logm(e))).real)


class TestEntropies:
    def test_pure_and_maximally_mixed(self):
        psi = np.zeros((3, 3))
        psi[0, 0] = 1.0
        assert abs(von_neumann_entropy(psi)) < 1e-12
        assert np.isclose(von_neumann_entropy(np.eye(4) / 4), np.log(4))

    @settings(max_examples=25, deadline=None)
    @given(n=st.integers(1, 4), seed=st.integers(0, 10**6))
    def test_relative_entropy_matches_scipy(self, n, seed):
        rng = np.random.default_rng(seed)
        d, e = la.random_density(n, rng), la.random_density(n, rng)
        assert np.isclose(relative_entropy(d, e), scipy_relative_entropy(d, e), atol=1e-8)
        assert relative_entropy(d, e) >= -1e-12

    def test_relative_entropy_support_violation_is_infinite(self):
        assert relative_entropy(np.eye(2) / 2, np.diag([1.0, 0.0])) == np.inf
        assert np.isfinite(relative_entropy(np.diag([1.0, 0.0]), np.eye(2) / 2))

    def test_pure_tripartite_complementarity(self):
        v = la.ginibre(12, 1, 3)
        v /= np.linalg.norm(v)
        s = TripartiteState(v @ v.conj().T, (2, 3, 2))
        assert np.isclose(von_neumann_entropy(s.d_ab), von_neumann_entropy(s.reduced([2])))


class TestSSA:
    @settings(max_examples=30, deadline=None)
    @given(dims=st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3)),
           seed=st.integers(0, 10**6))
    def test_gap_is_nonnegative(self, dims, seed):
        assert ssa_gap(random_tripartite_state(dims, seed)) >= -1e-10

    def test_gap_equals_relative_entropy_difference(self):
        s = random_tripartite_state((2, 3, 2), 4)
        big, small = ssa_gap_via_relative_entropy(s)
        assert np.isclose(big - small, ssa_gap(s))

    def test_product_state_has_zero_gap(self):
        rng = np.random.default_rng(5)
        rho = la.tensor_product(*(la.random_density(k, rng) for k in (2, 3, 2)))
        assert abs(ssa_gap(TripartiteState(rho, (2, 3, 2)))) < 1e-12

    def test_markov_pair_is_consistent(self):
        s = random_tripartite_state((2, 2, 2), 6)
        t, d1, d2 = markov_pair(s)
        assert np.allclose(t(d2), s.d_ab)
        assert np.allclose(t(d1), np.kron(np.eye(2) / 2, s.d_b))

    def test_rejects_bad_dims(self):
        with pytest.raises(DimensionError):
            TripartiteState(np.eye(6) / 6, (2, 2, 2))


class TestMarkovStructure:
    def test_generated_state_has_zero_gap(self):
        assert abs(ssa_gap(build_markov_state(MARKOV))) < 1e-9

    def test_structure_recovers_spec(self):
        s = build_markov_state(MARKOV)
        dec = ssa_equality_structure(s)
        assert dec.shapes == [(2, 1), (1, 2)]
        assert np.allclose(dec.weights, [0.5, 0.5], atol=1e-8)
        assert la.hs_norm(dec.reassemble() - s.density) < 1e-8
        assert dec.middle_overlap() < 1e-9

    @settings(max_examples=6, deadline=None)
    @given(seed=st.integers(0, 10**6))
    def test_rotated_middle_system(self, seed):
        spec = MarkovSpec(2, 2, ((1, 2, 0.6), (2, 1, 0.3), (1, 1, 0.1)), seed=seed, rotate=True)
        dec = ssa_equality_structure(build_markov_state(spec))
        assert dec.shapes == [(1, 2), (2, 1), (1, 1)]
        assert np.allclose(dec.weights, [0.6, 0.3, 0.1], atol=1e-8)

    def test_middle_algebra_dimension(self):
        s = build_markov_state(MARKOV)
        dh, a_b = middle_algebra(s)
        assert a_b.dim == 2 * 2 + 1 * 1
        assert dh.dim == 4 * a_b.dim

    def test_strict_inequality_has_no_structure(self):
        with pytest.raises(PreconditionError):
            ssa_equality_structure(random_tripartite_state((2, 3, 2), 1))

    def test_sufficiency_matches_gap(self):
        assert ssa_sufficiency_report(build_markov_state(MARKOV)).verdict
        assert not ssa_sufficiency_report(random_tripartite_state((2, 3, 2), 2)).verdict

    def test_spec_validation(self):
        with pytest.raises(InvalidInputError):
            MarkovSpec(2, 2, ((1, 1, 0.5), (1, 1, 0.4))).validate()
