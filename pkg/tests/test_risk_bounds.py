import numpy as np
import pytest
from scipy.integrate import quad

from adafpca import (
    BandwidthGrid,
    Kernel,
    RiskBoundInputs,
    eigenfunction_bound,
    eigenvalue_bound,
    kernel_moment,
    make_uniform_grid,
    n_gamma,
    select_bandwidths,
    selection_counts,
)
from adafpca.errors import DegenerateSpectrum, DesignTooSparse, InfeasibleError
from adafpca.moments import MomentEstimates
from adafpca.regularity import RegularityEstimate
from adafpca.risk_bounds import inflate_bandwidth

from conftest import assert_trace_properties, brownian_sample

EPA = Kernel.EPANECHNIKOV


class TestKernelMoment:
    def test_density_normalization(self):
        assert kernel_moment(0.0, EPA) == pytest.approx(1.0, abs=1e-14)

    def test_first_absolute_moment(self):
        assert kernel_moment(1.0, EPA) == pytest.approx(0.375, abs=1e-14)

    def test_second_moment(self):
        assert kernel_moment(2.0, EPA) == pytest.approx(0.2, abs=1e-14)

    @pytest.mark.parametrize("kernel", list(Kernel))
    @pytest.mark.parametrize("a", [0.0, 0.5, 1.0, 1.3, 2.0])
    def test_matches_quadrature(self, kernel, a):
        oracle, _ = quad(lambda u: np.abs(u) ** a * float(kernel(u)), -1, 1)
        assert kernel_moment(a, kernel) == pytest.approx(oracle, abs=1e-9)

    def test_vectorized(self):
        a = np.array([0.0, 1.0, 2.0])
        assert np.allclose(kernel_moment(a, EPA), [1.0, 0.375, 0.2])


def synthetic_inputs(grid, m2, sigma2, c2, H, L, lam, psi=None, kernel=EPA):
    g = len(grid)
    moments = MomentEstimates(
        grid=grid,
        m2=np.broadcast_to(np.asarray(m2, dtype=float), (g,)).copy(),
        c2=np.broadcast_to(np.asarray(c2, dtype=float), (g, g)).copy(),
        sigma2=np.broadcast_to(np.asarray(sigma2, dtype=float), (g,)).copy(),
        b_used=0.1,
    )
    regularity = RegularityEstimate(
        grid=grid,
        H=np.broadcast_to(np.asarray(H, dtype=float), (g,)).copy(),
        L=np.broadcast_to(np.asarray(L, dtype=float), (g,)).copy(),
        delta_star=0.05,
        gamma=0.75,
    )
    return RiskBoundInputs(
        moments=moments,
        regularity=regularity,
        proxy_eigenvalues=np.asarray(lam, dtype=float),
        proxy_eigenfunctions=psi,
        K0=len(lam),
        kernel=kernel,
    )


class TestEigenvalueBound:
    def test_bias_term_closed_form(self):
        # H = 0.5, L = 1, m2 = 1, constant proxies: B1 = 4 * h * moment(1)
        grid = make_uniform_grid(101)
        inputs = synthetic_inputs(grid, 1.0, 0.0, 0.0, 0.5, 1.0, [1.0, 0.5])
        sample = brownian_sample(5, 30, seed=0)
        for h in (0.02, 0.08):
            b1, _, _ = eigenvalue_bound(inputs, sample, 1, h)
            assert b1 == pytest.approx(1.5 * h, rel=1e-10)

    def test_bias_scales_linearly_for_h_half(self):
        grid = make_uniform_grid(51)
        inputs = synthetic_inputs(grid, 1.0, 0.0, 0.0, 0.5, 1.0, [1.0, 0.5])
        sample = brownian_sample(5, 30, seed=0)
        b1_full, _, _ = eigenvalue_bound(inputs, sample, 1, 0.08)
        b1_half, _, _ = eigenvalue_bound(inputs, sample, 1, 0.04)
        assert b1_full / b1_half == pytest.approx(2.0, rel=1e-12)

    def test_penalty_vanishes_when_all_curves_selected(self):
        grid = make_uniform_grid(21)
        inputs = synthetic_inputs(grid, 1.0, 1.0, 1.0, 0.5, 1.0, [1.0, 0.5])
        sample = brownian_sample(10, 40, common=True)
        w_t, w_st = selection_counts(sample, 0.5, 0.5, 0.3)
        assert w_st == 10
        _, _, b3 = eigenvalue_bound(inputs, sample, 1, 0.3)
        assert b3 == 0.0

    def test_infeasible_bandwidth_signals_infinite_terms(self):
        grid = make_uniform_grid(21)
        inputs = synthetic_inputs(grid, 1.0, 1.0, 1.0, 0.5, 1.0, [1.0, 0.5])
        sample = brownian_sample(4, 4, seed=1)
        b1, b2, b3 = eigenvalue_bound(inputs, sample, 1, 1e-6)
        assert np.isfinite(b1)
        assert np.isinf(b2) and np.isinf(b3)


def oracle_terms(inputs, sample, j, h):
    """Independent evaluation of both bound families with scalar operations."""
    grid = inputs.moments.grid
    pts, w = grid.points, grid.quad_weights
    n = sample.n_curves
    m2, s2, c2 = inputs.moments.m2, inputs.moments.sigma2, inputs.moments.c2
    phi = inputs.regularity.L ** 2 * h ** (2 * inputs.regularity.H) * np.array(
        [kernel_moment(2 * ht, inputs.kernel) for ht in inputs.regularity.H]
    )
    psi2 = inputs.psi_squared()
    g = len(pts)
    inv_ng = np.empty((g, g))  # inv_ng[a, b] = 1 / N_Gamma(pts[b] | pts[a])
    inv_w = np.empty((g, g))
    for a in range(g):
        for b in range(g):
            inv_ng[a, b] = 1.0 / n_gamma(sample, pts[a], pts[b], h, inputs.kernel)
            inv_w[a, b] = 1.0 / selection_counts(sample, pts[a], pts[b], h)[1]

    def lam_terms(jj):
        u = psi2[jj - 1]
        a_int = np.sum(w * m2 * u)
        b_int = np.sum(w * phi * u)
        b1 = 4.0 * a_int * b_int
        b2 = b3 = 0.0
        for ti in range(g):
            for si in range(g):
                ww = w[ti] * w[si] * u[ti] * u[si]
                b2 += ww * (
                    s2[ti] * m2[si] * inv_ng[ti, si] + s2[si] * m2[ti] * inv_ng[si, ti]
                )
                b3 += ww * c2[si, ti] * (inv_w[si, ti] - 1.0 / n)
        return b1, 2.0 * b2, b3

    def psi_terms(jj):
        lam = inputs.proxy_eigenvalues
        b1 = b2 = b3 = 0.0
        for k in range(1, inputs.K0 + 1):
            if k == jj:
                continue
            gap2 = (lam[jj - 1] - lam[k - 1]) ** 2
            uj, uk = psi2[jj - 1], psi2[k - 1]
            t1 = np.sum(w * m2 * uj) * np.sum(w * phi * uk)
            t2 = np.sum(w * m2 * uk) * np.sum(w * phi * uj)
            b1 += 2.0 / gap2 * (t1 + t2)
            acc2 = acc3 = 0.0
            for si in range(g):
                for ti in range(g):
                    ww = w[si] * w[ti] * uk[si] * uj[ti]
                    acc2 += ww * (
                        s2[si] * m2[ti] * inv_ng[si, ti]
                        + s2[ti] * m2[si] * inv_ng[ti, si]
                    )
                    acc3 += ww * c2[si, ti] * (inv_w[si, ti] - 1.0 / n)
            b2 += 2.0 / gap2 * acc2
            b3 += 1.0 / gap2 * acc3
        return b1, b2, b3

    return lam_terms(j), psi_terms(j)


class TestAgainstScalarOracle:
    def test_both_families_match_direct_summation(self):
        grid = make_uniform_grid(9)
        sample = brownian_sample(10, 25, noise_sd=0.2, seed=3)
        rng = np.random.default_rng(0)
        psi = rng.standard_normal((2, len(grid))) + 1.0
        inputs = synthetic_inputs(
            grid,
            m2=rng.uniform(0.5, 1.5, len(grid)),
            sigma2=rng.uniform(0.1, 0.3, len(grid)),
            c2=1.0,
            H=rng.uniform(0.3, 0.7, len(grid)),
            L=rng.uniform(0.8, 1.2, len(grid)),
            lam=[2.0, 1.0],
            psi=psi,
        )
        h = 0.35
        lam_oracle, psi_oracle = oracle_terms(inputs, sample, 1, h)
        lam_terms = eigenvalue_bound(inputs, sample, 1, h)
        psi_terms = eigenfunction_bound(inputs, sample, 1, h)
        assert np.allclose(lam_terms, lam_oracle, rtol=1e-9)
        assert np.allclose(psi_terms, psi_oracle, rtol=1e-9)

    def test_two_element_hand_expansion(self):
        # with constant proxies the element-j bound is the eigenvalue bound
        # scaled by 1/gap^2, for any single competing element
        grid = make_uniform_grid(21)
        sample = brownian_sample(8, 30, noise_sd=0.1, seed=5)
        gap = 0.7
        inputs = synthetic_inputs(
            grid, 1.3, 0.2, 0.9, 0.45, 1.1, [2.0, 2.0 - gap]
        )
        h = 0.3
        lam_terms = np.array(eigenvalue_bound(inputs, sample, 1, h))
        psi_terms = np.array(eigenfunction_bound(inputs, sample, 1, h))
        assert np.allclose(psi_terms, lam_terms / gap**2, rtol=1e-12)

    def test_doubling_gap_quarters_bound(self):
        grid = make_uniform_grid(21)
        sample = brownian_sample(8, 30, noise_sd=0.1, seed=5)
        narrow = synthetic_inputs(grid, 1.0, 0.2, 0.9, 0.5, 1.0, [2.0, 1.5])
        wide = synthetic_inputs(grid, 1.0, 0.2, 0.9, 0.5, 1.0, [2.5, 1.5])
        h = 0.3
        t_narrow = np.array(eigenfunction_bound(narrow, sample, 1, h))
        t_wide = np.array(eigenfunction_bound(wide, sample, 1, h))
        assert np.allclose(t_wide, t_narrow / 4.0, rtol=1e-12)

    def test_zero_gap_degenerate(self):
        grid = make_uniform_grid(11)
        sample = brownian_sample(5, 20, seed=1)
        inputs = synthetic_inputs(grid, 1.0, 0.1, 0.5, 0.5, 1.0, [1.0, 1.0])
        with pytest.raises(DegenerateSpectrum):
            eigenfunction_bound(inputs, sample, 1, 0.3)


class TestSelectBandwidths:
    @staticmethod
    def default_inputs(sample, grid_size=31, psi=None, lam=(1.0, 0.5, 1 / 3)):
        grid = make_uniform_grid(grid_size)
        rng = np.random.default_rng(77)
        return synthetic_inputs(
            grid,
            m2=rng.uniform(0.8, 1.2, grid_size),
            sigma2=0.2,
            c2=0.8,
            H=0.5,
            L=1.0,
            lam=list(lam),
            psi=psi,
        )

    def test_first_run_collapse_is_exact(self):
        sample = brownian_sample(40, 40, noise_sd=0.3, seed=19)
        inputs = self.default_inputs(sample)
        grid = BandwidthGrid.default(sample)
        sel = select_bandwidths(inputs, sample, grid, J=3)
        assert len(set(sel.idx_lambda)) == 1
        assert len(set(sel.idx_psi)) == 1
        assert sel.idx_lambda[0] == sel.idx_psi[0]
        assert_trace_properties(sel)

    def test_inflation_formula(self):
        assert inflate_bandwidth(0.05, 1e-4) == pytest.approx(
            0.14978661367769955, abs=1e-15
        )
        # inflation strictly increases any bandwidth below 1/e
        for h in (0.01, 0.05, 0.1, 0.3):
            assert inflate_bandwidth(h, 1e-4) > h

    def test_inflation_clamped(self):
        assert inflate_bandwidth(0.45, 1e-4) == pytest.approx(0.45 * np.log(1 / 0.45))
        assert inflate_bandwidth(0.4, 1e-4, cap=0.3) == 0.3
        # the lower clamp keeps the inflated value inside the grid range
        assert inflate_bandwidth(1e-9, 0.01) == pytest.approx(0.01)

    def test_selected_bandwidths_lie_in_grid(self):
        sample = brownian_sample(40, 40, noise_sd=0.3, seed=23)
        inputs = self.default_inputs(sample)
        grid = BandwidthGrid.default(sample)
        sel = select_bandwidths(inputs, sample, grid, J=3)
        for h in np.concatenate((sel.h_lambda, sel.h_psi)):
            assert h in grid.values
        assert np.all(sel.h_lambda_inflated >= grid.values[0])
        assert np.all(sel.h_lambda_inflated <= 0.5)

    def test_common_design_respects_spacing_floor(self):
        sample = brownian_sample(30, 26, noise_sd=0.2, common=True, seed=3)
        spacing = 1.0 / 25.0
        inputs = self.default_inputs(sample)
        grid = BandwidthGrid(values=np.geomspace(0.005, 0.1, 25))
        assert grid.values[0] < spacing / 2
        sel = select_bandwidths(inputs, sample, grid, J=2)
        assert np.all(sel.h_lambda >= spacing / 2)
        assert np.all(sel.h_psi >= spacing / 2)
        assert not sel.feasible[grid.values < spacing / 2].any()

    def test_all_infeasible_raises(self):
        sample = brownian_sample(3, 3, seed=2)
        inputs = self.default_inputs(sample)
        grid = BandwidthGrid(values=np.array([1e-7, 2e-7, 4e-7]))
        with pytest.raises(DesignTooSparse):
            select_bandwidths(inputs, sample, grid, J=2)

    def test_j_bounds_validated(self):
        sample = brownian_sample(5, 10, seed=2)
        inputs = self.default_inputs(sample)
        grid = BandwidthGrid(values=np.array([0.2, 0.3]))
        with pytest.raises(ValueError):
            select_bandwidths(inputs, sample, grid, J=9)

    def test_default_grid_rejects_tiny_samples(self):
        sample = brownian_sample(50, 4, seed=6)
        with pytest.raises(InfeasibleError):
            BandwidthGrid.default(sample)
