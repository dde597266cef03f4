import numpy as np
import pytest

from adafpca import Curve, FunctionalSample, Kernel, lscv_bandwidth, presmooth_sample
from adafpca.errors import BandwidthGridTooSmall
from adafpca.presmoothing import (
    default_lscv_candidates,
    pilot_bandwidth,
    presmooth_curve,
)

from conftest import brownian_sample

EPA = Kernel.EPANECHNIKOV


def brute_cv_score(times, values, h, kernel):
    """Independent leave-one-out CV implementation (plain loops)."""
    times = np.asarray(times)
    values = np.asarray(values)
    total = 0.0
    any_window = False
    for m in range(len(times)):
        others = np.delete(np.arange(len(times)), m)
        dist = np.abs(times[others] - times[m])
        if np.all(dist > h):
            total += (values[m] - values.mean()) ** 2
            continue
        any_window = True
        kv = kernel((times[others] - times[m]) / h)
        if kv.sum() > 0:
            pred = kv @ values[others] / kv.sum()
        else:
            inside = dist <= h
            pred = values[others][inside].mean()
        total += (values[m] - pred) ** 2
    return total, any_window


class TestLscvBandwidth:
    def test_constant_curve_picks_smallest_feasible(self):
        rng = np.random.default_rng(0)
        t = np.sort(rng.uniform(size=30))
        c = Curve(id=0, times=t, values=np.full(30, 2.5))
        candidates = np.geomspace(1e-5, 0.5, 12)
        chosen = lscv_bandwidth(c, candidates, EPA)
        feasible = [h for h in candidates if brute_cv_score(t, c.values, h, EPA)[1]]
        assert chosen == pytest.approx(min(feasible))

    def test_matches_brute_force_argmin(self):
        rng = np.random.default_rng(5)
        t = np.sort(rng.uniform(size=40))
        y = np.sin(4 * t) + 0.2 * rng.standard_normal(40)
        c = Curve(id=0, times=t, values=y)
        candidates = np.geomspace(0.02, 0.5, 10)
        scores = [brute_cv_score(t, y, h, EPA) for h in candidates]
        best = min(
            (s, h) for (s, ok), h in zip(scores, candidates) if ok
        )[1]
        assert lscv_bandwidth(c, candidates, EPA) == pytest.approx(best)

    def test_noisier_data_gets_wider_bandwidth(self):
        # bias-variance direction: more noise should push h up
        wins = 0
        reps = 50
        for rep in range(reps):
            rng = np.random.default_rng(100 + rep)
            t = np.sort(rng.uniform(size=100))
            base = rng.standard_normal(100)
            candidates = np.geomspace(0.02, 0.5, 20)
            y_hi = t + 0.5 * base
            y_lo = t + 0.05 * base
            h_hi = lscv_bandwidth(Curve(id=0, times=t, values=y_hi), candidates, EPA)
            h_lo = lscv_bandwidth(Curve(id=0, times=t, values=y_lo), candidates, EPA)
            wins += h_hi > h_lo
        assert wins >= 0.8 * reps

    def test_pure_noise_prefers_wide_window(self):
        wins = 0
        reps = 21
        for rep in range(reps):
            rng = np.random.default_rng(500 + rep)
            t = np.sort(rng.uniform(size=10))
            c = Curve(id=0, times=t, values=rng.standard_normal(10))
            wins += lscv_bandwidth(c, [0.01, 0.5], EPA) == 0.5
        assert wins > reps / 2

    def test_needs_three_points(self):
        c = Curve(id=0, times=[0.2, 0.8], values=[1.0, 2.0])
        with pytest.raises(ValueError, match="3 observations"):
            lscv_bandwidth(c, [0.1], EPA)

    def test_all_windows_empty_raises(self):
        c = Curve(id=0, times=[0.1, 0.5, 0.9], values=[1.0, 2.0, 3.0])
        with pytest.raises(BandwidthGridTooSmall):
            lscv_bandwidth(c, [1e-6], EPA)


class TestPresmoothCurve:
    def test_interpolates_anchor_values_exactly(self):
        sample = brownian_sample(2, 25, seed=3)
        c = sample.curves[0]
        pres = presmooth_curve(c, 0.1, EPA)
        idx = np.searchsorted(pres.anchor_times, c.times)
        assert np.allclose(pres.evaluate(c.times), pres.anchor_values[idx], atol=1e-14)

    def test_affine_between_anchors(self):
        sample = brownian_sample(2, 15, seed=4)
        pres = presmooth_curve(sample.curves[0], 0.1, EPA)
        a, b = pres.anchor_times[3], pres.anchor_times[4]
        inner = np.linspace(a, b, 9)
        second_diff = np.diff(pres.evaluate(inner), n=2)
        assert np.abs(second_diff).max() < 1e-10

    def test_degenerate_endpoint_copies_nearest(self):
        c = Curve(id=0, times=[0.45, 0.5, 0.55], values=[1.0, 2.0, 3.0])
        pres = presmooth_curve(c, 0.05, EPA)
        assert pres.evaluate(0.0) == pres.anchor_values[1]
        assert pres.evaluate(1.0) == pres.anchor_values[-2]


class TestPresmoothSample:
    def test_full_subset_ignores_seed(self):
        sample = brownian_sample(20, 30, noise_sd=0.2, seed=8)
        h1 = presmooth_sample(sample, 20, EPA, seed=1)[0].bandwidth
        h2 = presmooth_sample(sample, 20, EPA, seed=99)[0].bandwidth
        assert h1 == h2

    def test_identical_curves_share_choice(self):
        base = brownian_sample(2, 30, seed=6, noise_sd=0.4).curves[0]
        curves = tuple(
            Curve(id=i, times=base.times, values=base.values) for i in range(6)
        )
        sample = FunctionalSample(curves=curves)
        pres = presmooth_sample(sample, 3, EPA, seed=0)
        single = pilot_bandwidth(base, default_lscv_candidates(sample), EPA)
        assert pres[0].bandwidth == single

    def test_interpolation_candidate_selected_without_noise(self):
        sample = brownian_sample(10, 80, noise_sd=0.0, seed=14)
        pres = presmooth_sample(sample, 10, EPA, seed=0)
        assert pres[0].bandwidth == 0.0
        c = sample.curves[0]
        assert np.allclose(pres[0].evaluate(c.times), c.values, atol=1e-14)

    def test_kernel_candidate_selected_with_noise(self):
        sample = brownian_sample(10, 80, noise_sd=0.5, seed=14)
        pres = presmooth_sample(sample, 10, EPA, seed=0)
        assert pres[0].bandwidth > 0.0

    def test_seed_determinism(self):
        sample = brownian_sample(40, 25, noise_sd=0.3, seed=2)
        a = presmooth_sample(sample, 10, EPA, seed=5)
        b = presmooth_sample(sample, 10, EPA, seed=5)
        assert a[0].bandwidth == b[0].bandwidth
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.anchor_values, pb.anchor_values)

    def test_order_invariance_given_common_bandwidth(self):
        sample = brownian_sample(6, 20, seed=12)
        pres = presmooth_sample(sample, 6, EPA, seed=0)
        reordered = FunctionalSample(curves=sample.curves[::-1])
        pres_r = presmooth_sample(reordered, 6, EPA, seed=0)
        for p, q in zip(pres, pres_r[::-1]):
            assert np.array_equal(p.anchor_values, q.anchor_values)
