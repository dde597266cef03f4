"""Shared fixtures: deterministic samples with known ground truth."""

import numpy as np
import pytest

from adafpca import Curve, DesignType, FunctionalSample


def brownian_sample(
    n_curves: int,
    n_points: int,
    noise_sd: float = 0.0,
    seed: int = 0,
    common: bool = False,
    include_endpoints: bool = False,
) -> FunctionalSample:
    """Exact standard Brownian paths observed at random or shared times.

    Serves as an independent oracle: paths are built from Gaussian
    increments, not from any covariance code under test.
    """
    rng = np.random.default_rng(seed)
    curves = []
    shared = np.linspace(0.0, 1.0, n_points) if common else None
    for i in range(n_curves):
        if common:
            t = shared
        elif include_endpoints:
            t = np.concatenate(([0.0], np.sort(rng.uniform(size=n_points - 2)), [1.0]))
        else:
            t = np.sort(rng.uniform(size=n_points))
        steps = np.diff(np.concatenate(([0.0], t)))
        x = np.cumsum(np.sqrt(steps) * rng.standard_normal(len(t)))
        y = x if noise_sd == 0.0 else x + noise_sd * rng.standard_normal(len(t))
        curves.append(Curve(id=i, times=t, values=y))
    return FunctionalSample(
        curves=tuple(curves),
        design=DesignType.COMMON if common else DesignType.INDEPENDENT,
    )


def assert_trace_properties(selection):
    """Shape checks every bound trace must satisfy.

    The squared-bias term grows strictly with the bandwidth, the
    curve-dropping penalty never grows, all terms are nonnegative, and the
    feasible bandwidths form an up-set (a contiguous suffix of the grid).
    """
    feas = selection.feasible
    assert feas.any()
    first = int(np.argmax(feas))
    assert feas[first:].all()
    for traces in (selection.lambda_traces, selection.psi_traces):
        b1, b2, b3 = traces[:, :, 0], traces[:, :, 1], traces[:, :, 2]
        assert np.all(np.diff(b1, axis=1) > 0)
        assert np.all(b1 >= 0) and np.all(b2 >= 0) and np.all(b3 >= 0)
        assert np.all(np.diff(b3[:, feas], axis=1) <= 0)


@pytest.fixture
def two_curve_sample() -> FunctionalSample:
    c0 = Curve(id=0, times=[0.1, 0.4, 0.8], values=[1.0, 2.0, 3.0])
    c1 = Curve(id=1, times=[0.2, 0.5, 0.9], values=[0.5, -1.0, 2.5])
    return FunctionalSample(curves=(c0, c1))


@pytest.fixture
def dense_noisy_sample() -> FunctionalSample:
    return brownian_sample(40, 60, noise_sd=0.3, seed=11)
