import numpy as np
import pytest

from adafpca import eigendecompose, make_uniform_grid, sign_align
from adafpca.covariance import CovarianceEstimate


def as_covariance(matrix, grid, h=0.1):
    return CovarianceEstimate(
        grid=grid,
        gamma_matrix=np.asarray(matrix, dtype=float),
        h_used=h,
        b_used=np.nan,
        correction_matrix=np.zeros_like(matrix),
    )


class TestBrownianOracle:
    # analytic eigen-pairs of the Brownian covariance min(s, t):
    # lambda_j = ((j - 1/2) pi)^-2, psi_j = sqrt(2) sin((j - 1/2) pi t)
    def test_eigenvalues_and_functions(self):
        grid = make_uniform_grid(101)
        cov = as_covariance(np.minimum.outer(grid.points, grid.points), grid)
        result = eigendecompose(cov, 6)
        for j in range(1, 5):
            lam_true = 1.0 / (((j - 0.5) ** 2) * np.pi**2)
            assert abs(result.eigenvalues[j - 1] - lam_true) / lam_true < 0.02
            psi_true = np.sqrt(2.0) * np.sin((j - 0.5) * np.pi * grid.points)
            aligned = sign_align(result.eigenfunctions[j - 1], psi_true, grid)
            err = np.sqrt(grid.integrate((aligned - psi_true) ** 2))
            assert err < 0.05


class TestEigendecompose:
    def test_rank_one_operator(self):
        grid = make_uniform_grid(51)
        phi = np.sqrt(2.0) * np.sin(np.pi * grid.points)
        phi = phi / np.sqrt(grid.integrate(phi * phi))
        cov = as_covariance(np.outer(phi, phi), grid)
        result = eigendecompose(cov, 3)
        assert result.eigenvalues[0] == pytest.approx(1.0, abs=1e-10)
        assert result.eigenvalues[1] == pytest.approx(0.0, abs=1e-10)
        aligned = sign_align(result.eigenfunctions[0], phi, grid)
        assert np.allclose(aligned, phi, atol=1e-8)

    def test_scaling_linearity(self):
        grid = make_uniform_grid(41)
        rng = np.random.default_rng(4)
        a = rng.standard_normal((41, 8))
        cov_matrix = a @ a.T / 8
        r1 = eigendecompose(as_covariance(cov_matrix, grid), 4)
        r2 = eigendecompose(as_covariance(2.5 * cov_matrix, grid), 4)
        assert np.allclose(r2.eigenvalues, 2.5 * r1.eigenvalues, rtol=1e-10)
        for f1, f2 in zip(r1.eigenfunctions, r2.eigenfunctions):
            assert np.allclose(np.abs(f1), np.abs(f2), atol=1e-8)

    def test_orthonormality_under_quadrature(self):
        grid = make_uniform_grid(61)
        rng = np.random.default_rng(9)
        a = rng.standard_normal((61, 61))
        cov = as_covariance((a + a.T) / 2, grid)
        result = eigendecompose(cov, 5)
        for i in range(5):
            for j in range(5):
                inner = grid.inner(result.eigenfunctions[i], result.eigenfunctions[j])
                assert abs(inner - (1.0 if i == j else 0.0)) < 1e-8

    def test_round_trip_of_known_basis(self):
        # a covariance assembled from J orthonormal grid functions gives them back
        grid = make_uniform_grid(81)
        raw = np.stack(
            [np.ones(81), grid.points - 0.5, (grid.points - 0.5) ** 2]
        )
        basis = []
        for f in raw:  # Gram-Schmidt under the quadrature inner product
            g = f - sum(grid.inner(f, b) * b for b in basis)
            basis.append(g / np.sqrt(grid.integrate(g * g)))
        lams = [3.0, 2.0, 1.0]
        matrix = sum(l * np.outer(b, b) for l, b in zip(lams, basis))
        result = eigendecompose(as_covariance(matrix, grid), 3)
        assert np.allclose(result.eigenvalues, lams, atol=1e-9)
        for b, f in zip(basis, result.eigenfunctions):
            aligned = sign_align(f, b, grid)
            assert np.allclose(aligned, b, atol=1e-7)

    def test_negative_eigenvalues_truncated_raw_kept(self):
        grid = make_uniform_grid(21)
        matrix = -0.5 * np.eye(21) / grid.quad_weights  # spectrum at -0.5
        result = eigendecompose(as_covariance(matrix, grid), 21)
        assert np.all(result.eigenvalues >= 0.0)
        assert result.raw_eigenvalues[-1] == pytest.approx(-0.5)

    def test_weyl_stability(self):
        # perturbing the covariance moves each eigenvalue by at most the
        # operator norm of the weighted perturbation
        grid = make_uniform_grid(41)
        rng = np.random.default_rng(2)
        a = rng.standard_normal((41, 10))
        base = a @ a.T / 10
        e = rng.standard_normal((41, 41)) * 1e-3
        e = (e + e.T) / 2
        r1 = eigendecompose(as_covariance(base, grid), 6)
        r2 = eigendecompose(as_covariance(base + e, grid), 6)
        sw = np.sqrt(grid.quad_weights)
        op_norm = np.abs(
            np.linalg.eigvalsh(e * sw[:, None] * sw[None, :])
        ).max()
        assert np.abs(r1.raw_eigenvalues - r2.raw_eigenvalues).max() <= op_norm + 1e-12

    def test_invalid_j(self):
        grid = make_uniform_grid(11)
        cov = as_covariance(np.eye(11), grid)
        with pytest.raises(ValueError):
            eigendecompose(cov, 12)

    def test_default_sign_convention(self):
        grid = make_uniform_grid(51)
        cov = as_covariance(np.minimum.outer(grid.points, grid.points), grid)
        result = eigendecompose(cov, 4)
        for f in result.eigenfunctions:
            assert grid.integrate(f) >= 0.0


class TestSignAlign:
    def test_flip(self):
        grid = make_uniform_grid(11)
        ref = np.ones(11)
        assert np.array_equal(sign_align(-ref, ref, grid), ref)

    def test_identity(self):
        grid = make_uniform_grid(11)
        ref = np.linspace(-1, 1, 11)
        assert np.array_equal(sign_align(ref, ref, grid), ref)

    def test_tiny_positive_inner_product_unchanged(self):
        grid = make_uniform_grid(11)
        psi = np.ones(11)
        ref = np.linspace(-1, 1.0001, 11)
        assert np.array_equal(sign_align(psi, ref, grid), psi)

    def test_zero_inner_product_tie_break(self):
        grid = make_uniform_grid(3)
        psi = np.array([-1.0, 0.0, 1.0])
        ref = np.array([0.0, 1.0, 0.0]) * 0.0
        aligned = sign_align(psi, ref, grid)
        assert aligned[0] >= 0.0
