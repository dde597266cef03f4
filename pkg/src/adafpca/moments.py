"""Plug-in moment functions and the nearest-pair noise-variance estimator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import DesignType, FunctionalSample, Grid
from .errors import EmptyNoiseWindow
from .presmoothing import PresmoothedCurve


@dataclass(frozen=True)
class MomentEstimates:
    """Grid-evaluated ``m2(t) = Var X_t``, ``c2(s,t) = Var X_s X_t``, and noise variance."""

    grid: Grid
    m2: np.ndarray
    c2: np.ndarray
    sigma2: np.ndarray
    b_used: float


def estimate_m2_c2(
    pres: list[PresmoothedCurve], grid: Grid
) -> tuple[np.ndarray, np.ndarray]:
    """Empirical variances of ``X_t`` and of the product ``X_s X_t``.

    Both use the plain ``1/N`` variance of presmoothed curve values on the
    grid, floored at zero; ``c2`` is exactly symmetric.
    """
    if len(pres) < 2:
        raise ValueError("moment estimation needs at least two curves")
    n = len(pres)
    x = np.stack([p.evaluate(grid.points) for p in pres])
    m2 = np.maximum(np.mean(x * x, axis=0) - np.mean(x, axis=0) ** 2, 0.0)

    x2 = x * x
    mean_prod = (x.T @ x) / n
    mean_prod_sq = (x2.T @ x2) / n
    c2 = np.maximum(mean_prod_sq - mean_prod * mean_prod, 0.0)
    c2 = (c2 + c2.T) / 2.0
    return m2, c2


def closest_pair_table(
    sample: FunctionalSample, points: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Closest-pair data of every curve at every point, window-independent.

    Returns ``(gaps_squared, second_distance)``, both ``(n_curves,
    n_points)``: the squared difference of the values at the two observation
    times closest to each point, and the distance of the second-closest
    time.  Distance ties resolve to the smaller observation index.
    """
    points = np.atleast_1d(np.asarray(points, dtype=float))
    n, g = sample.n_curves, len(points)
    gaps = np.empty((n, g))
    second = np.empty((n, g))
    for i, curve in enumerate(sample.curves):
        if len(curve) < 2:
            raise ValueError("noise estimation needs >= 2 observations per curve")
        dist = np.abs(curve.times[:, None] - points[None, :])
        order = np.argsort(dist, axis=0, kind="stable")
        first, runner = order[0], order[1]
        cols = np.arange(g)
        second[i] = dist[runner, cols]
        d = curve.values[first] - curve.values[runner]
        gaps[i] = d * d
    return gaps, second


def sigma2_hat(sample: FunctionalSample, t: float, b: float) -> float:
    """Noise variance at ``t`` from closest-pair squared differences.

    A curve enters the average only when its second-closest observation time
    is within ``b`` of ``t``; each included curve contributes half of the
    squared difference of its two closest observations.
    """
    if b <= 0:
        raise ValueError("b must be positive")
    gaps, second = closest_pair_table(sample, np.array([t]))
    included = second[:, 0] <= b
    count = int(included.sum())
    if count == 0:
        raise EmptyNoiseWindow(
            f"no curve has its two closest observations within {b} of t={t}"
        )
    return float(gaps[included, 0].sum() / (2.0 * count))


def sigma2_from_table(
    gaps: np.ndarray, second: np.ndarray, b: float, points: np.ndarray
) -> np.ndarray:
    """Noise variances for a precomputed closest-pair table."""
    if b <= 0:
        raise ValueError("b must be positive")
    included = second <= b
    counts = included.sum(axis=0)
    if np.any(counts == 0):
        bad = np.asarray(points)[np.argmax(counts == 0)]
        raise EmptyNoiseWindow(
            f"no curve has its two closest observations within {b} of t={bad}"
        )
    return (gaps * included).sum(axis=0) / (2.0 * counts)


def sigma2_on_grid(sample: FunctionalSample, grid: Grid, b: float) -> np.ndarray:
    """Noise variance on every grid point (raises where no curve qualifies)."""
    gaps, second = closest_pair_table(sample, grid.points)
    return sigma2_from_table(gaps, second, b, grid.points)


def default_b(sample: FunctionalSample) -> float:
    """Default window for the noise estimator.

    One tenth of the domain for independent designs; the largest spacing
    between consecutive shared observation times for common designs.
    """
    if sample.design is DesignType.COMMON:
        times = sample.curves[0].times
        if len(times) < 2:
            raise ValueError("common design noise window needs >= 2 points")
        return float(np.max(np.diff(times)))
    return sample.domain_length / 10.0
