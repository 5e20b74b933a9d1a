import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from coarsegrain import linalg as la
from coarsegrain.errors import DimensionError, NotHermitianError, SingularMatrixError


def explicit_partial_trace(m, dims, keep):
    """Index-sum oracle: loops over every matrix element."""
    dims = list(dims)
    n = len(dims)
    kept = [dims[i] for i in keep]
    out = np.zeros((int(np.prod(kept)),) * 2, dtype=complex)
    for row in np.ndindex(*dims):
        for col in np.ndindex(*dims):
            if any(row[i] != col[i] for i in range(n) if i not in keep):
                continue
            r = np.ravel_multi_index([row[i] for i in keep], kept)
            c = np.ravel_multi_index([col[i] for i in keep], kept)
            out[r, c] += m[np.ravel_multi_index(row, dims), np.ravel_multi_index(col, dims)]
    return out


dims_strategy = st.lists(st.integers(1, 3), min_size=1, max_size=3)


class TestTensorAndPartialTrace:
    def test_product_state_reduces_to_factors(self):
        rng = np.random.default_rng(0)
        a, b, c = (la.random_density(k, rng) for k in (2, 3, 2))
        abc = la.tensor_product(a, b, c)
        assert np.allclose(la.partial_trace(abc, (2, 3, 2), [1]), b)
        assert np.allclose(la.partial_trace(abc, (2, 3, 2), [0, 2]), np.kron(a, c))

    @settings(max_examples=40, deadline=None)
    @given(dims=dims_strategy, data=st.data())
    def test_matches_index_sum_oracle(self, dims, data):
        keep = data.draw(st.lists(st.integers(0, len(dims) - 1), unique=True).map(sorted))
        n = int(np.prod(dims))
        m = la.ginibre(n, n, np.random.default_rng(data.draw(st.integers(0, 10**6))))
        assert np.allclose(la.partial_trace(m, dims, keep), explicit_partial_trace(m, dims, keep))

    def test_trace_out_everything_gives_trace(self):
        m = la.ginibre(6, 6, 1)
        assert np.isclose(la.partial_trace(m, (2, 3), [])[0, 0], np.trace(m))

    def test_rejects_inconsistent_dims(self):
        with pytest.raises(DimensionError):
            la.partial_trace(np.eye(5), (2, 3), [0])

    def test_rejects_out_of_range_keep(self):
        with pytest.raises(DimensionError):
            la.partial_trace(np.eye(6), (2, 3), [2])

    def test_tensor_product_needs_a_factor(self):
        with pytest.raises(ValueError):
            la.tensor_product()


class TestPredicates:
    def test_density(self):
        d = la.random_density(4, 3)
        assert la.is_density(d)
        assert not la.is_density(2 * d)
        assert not la.is_density(np.diag([1.5, -0.5]))

    def test_check_density_errors(self):
        with pytest.raises(NotHermitianError):
            la.check_density(np.array([[0.5, 1.0], [0.0, 0.5]]))
        with pytest.raises(DimensionError):
            la.check_density(np.ones((2, 3)) / 2)

    def test_invertibility(self):
        assert la.is_invertible(np.eye(3) / 3)
        with pytest.raises(SingularMatrixError):
            la.require_invertible(np.diag([1.0, 0.0]))

    def test_unitary(self):
        assert la.is_unitary(la.random_unitary(5, 0))
        assert not la.is_unitary(2 * np.eye(2))


class TestEigenAndFunctions:
    def test_eig_reconstructs(self):
        h = la.random_hermitian(6, 2)
        e = la.hermitian_eig(h)
        assert np.allclose(e.reconstruct(), h)
        assert np.all(np.diff(e.eigenvalues) >= 0)

    def test_eig_is_deterministic_on_degenerate_spectrum(self):
        u = la.random_unitary(4, 5)
        h = u @ np.diag([1.0, 1.0, 2.0, 2.0]) @ u.conj().T
        a, b = la.hermitian_eig(h), la.hermitian_eig(h.copy())
        assert np.array_equal(a.eigenvectors, b.eigenvectors)

    def test_degenerate_groups(self):
        groups = la.degenerate_groups(np.array([0.0, 1e-14, 1.0, 1.0 + 1e-13, 2.0]))
        assert [list(g) for g in groups] == [[0, 1], [2, 3], [4]]

    def test_scalar_spectrum_is_one_group(self):
        assert len(la.degenerate_groups(np.full(5, 0.3) + 1e-17 * np.arange(5))) == 1

    def test_sqrt_and_inverse_sqrt(self):
        d = la.random_density(5, 4)
        r = la.sqrtm_psd(d)
        assert np.allclose(r @ r, d)
        assert np.allclose(la.inv_sqrtm(d) @ r, np.eye(5))

    def test_log_matches_scipy(self):
        d = la.random_density(4, 6)
        assert np.allclose(la.logm_pd(d), scipy.linalg.logm(d))

    def test_imaginary_power_group_law(self):
        d = la.random_density(4, 7)
        u1, u2 = la.imaginary_power(d, 0.3), la.imaginary_power(d, 0.4)
        assert np.allclose(u1 @ u2, la.imaginary_power(d, 0.7))
        assert la.is_unitary(u1)
        assert np.allclose(la.imaginary_power(d, -0.3), u1.conj().T)

    def test_imaginary_power_matches_expm(self):
        d = la.random_density(3, 8)
        assert np.allclose(la.imaginary_power(d, 0.5), scipy.linalg.expm(0.5j * scipy.linalg.logm(d)))

    def test_imaginary_power_needs_invertible(self):
        with pytest.raises(SingularMatrixError):
            la.imaginary_power(np.diag([1.0, 0.0]), 1.0)


class TestInnerProducts:
    def test_weighted_inner_is_positive(self):
        d = la.random_density(4, 9)
        x = la.ginibre(4, 4, 10)
        assert la.weighted_inner(x, x, d).real > 0
        assert abs(la.weighted_inner(x, x, d).imag) < 1e-12

    def test_weighted_inner_at_tracial_state(self):
        x, y = la.ginibre(3, 3, 11), la.ginibre(3, 3, 12)
        assert np.isclose(la.weighted_inner(x, y, np.eye(3) / 3), la.hs_inner(x, y) / 3)


class TestRandom:
    def test_seeded_generation_is_reproducible(self):
        assert np.array_equal(la.random_density(4, 42), la.random_density(4, 42))

    def test_rank_deficient_density(self):
        d = la.random_density(5, 1, rank=2)
        assert np.linalg.matrix_rank(d, tol=1e-10) == 2
        assert la.is_density(d)
