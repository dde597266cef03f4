"""Pilot smoothing of individual curves.

Each curve is smoothed at the anchor points ``{0, T_1, ..., T_M, 1}`` with a
local-constant kernel fit and linearly interpolated in between.  The pilot
bandwidth is chosen by leave-one-out least-squares cross-validation on a
small random subset of curves, taking the median of the selected values.

Plain interpolation of the raw observations (the zero-bandwidth limit)
competes in the same cross-validation: on low-noise, densely observed curves
it wins and avoids blurring the small-scale increments the regularity
estimators probe, while on noisy curves the kernel candidates win.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data_model import FunctionalSample, Curve, mean_observations
from .errors import BandwidthGridTooSmall, InfeasibleError
from .smoothing import Kernel, nw_weight_matrix

LSCV_GRID_SIZE = 20
LSCV_GRID_MAX = 0.5


@dataclass(frozen=True)
class PresmoothedCurve:
    """Piecewise-linear interpolant of kernel-smoothed anchor values."""

    curve_id: int
    anchor_times: np.ndarray
    anchor_values: np.ndarray
    bandwidth: float = field(default=np.nan)

    def evaluate(self, t) -> np.ndarray:
        """Evaluate by linear interpolation between anchors."""
        return np.interp(np.asarray(t, dtype=float), self.anchor_times, self.anchor_values)

    def __call__(self, t):
        return self.evaluate(t)


def presmooth_curve(curve: Curve, h: float, kernel: Kernel) -> PresmoothedCurve:
    """Smooth one curve at its anchors ``{0} U {T_m} U {1}``.

    Anchors with an empty window (possible at the domain endpoints) copy the
    value of the nearest non-degenerate anchor.  ``h = 0`` means plain
    interpolation: anchor values are the raw observations, extended as
    constants to the endpoints.
    """
    anchors = np.unique(np.concatenate(([0.0], curve.times, [1.0])))
    if h == 0.0:
        values = np.interp(anchors, curve.times, curve.values)
        return PresmoothedCurve(
            curve_id=curve.id, anchor_times=anchors, anchor_values=values, bandwidth=0.0
        )
    weights = nw_weight_matrix(curve.times, anchors, h, kernel)
    values = curve.values @ weights
    selected = np.abs(curve.times[:, None] - anchors[None, :]).min(axis=0) <= h
    if not np.all(selected):
        # observation times are themselves anchors, so some anchor is selected
        sel_idx = np.nonzero(selected)[0]
        for j in np.nonzero(~selected)[0]:
            nearest = sel_idx[np.argmin(np.abs(anchors[sel_idx] - anchors[j]))]
            values[j] = values[nearest]
    return PresmoothedCurve(
        curve_id=curve.id, anchor_times=anchors, anchor_values=values, bandwidth=h
    )


def _loo_scores(curve: Curve, h: float, kernel: Kernel) -> tuple[float, bool]:
    """CV score of one bandwidth; flag is False when every window is empty."""
    t, y = curve.times, curve.values
    diff = t[:, None] - t[None, :]
    in_window = np.abs(diff) <= h
    kvals = kernel(diff / h)
    np.fill_diagonal(in_window, False)
    np.fill_diagonal(kvals, 0.0)
    counts = in_window.sum(axis=1)
    ksum = kvals.sum(axis=1)

    pred = np.zeros_like(y)
    regular = ksum > 0.0
    np.divide(kvals @ y, ksum, out=pred, where=regular)
    edge_only = (~regular) & (counts > 0)
    if np.any(edge_only):
        pred[edge_only] = (in_window[edge_only] @ y) / counts[edge_only]
    empty = counts == 0
    # empty leave-one-out windows are penalized against the curve mean
    pred[empty] = float(np.mean(y))
    score = float(np.sum((y - pred) ** 2))
    return score, bool(np.all(empty))


def _best_kernel_candidate(curve: Curve, candidates, kernel: Kernel) -> tuple[float, float]:
    best_h, best_score = None, np.inf
    for h in candidates:
        score, all_empty = _loo_scores(curve, float(h), kernel)
        if all_empty:
            continue
        if score < best_score:
            best_h, best_score = float(h), score
    if best_h is None:
        raise BandwidthGridTooSmall(
            "every candidate bandwidth leaves all leave-one-out windows empty"
        )
    return best_h, best_score


def _loo_interpolation_score(curve: Curve) -> float:
    """CV score of the zero-bandwidth candidate: leave-one-out interpolation."""
    t, y = curve.times, curve.values
    pred = np.empty_like(y)
    pred[0], pred[-1] = y[1], y[-2]
    if len(t) > 2:
        span = t[2:] - t[:-2]
        frac = (t[1:-1] - t[:-2]) / span
        pred[1:-1] = y[:-2] + frac * (y[2:] - y[:-2])
    return float(np.sum((y - pred) ** 2))


def lscv_bandwidth(curve: Curve, candidate_h, kernel: Kernel) -> float:
    """Leave-one-out cross-validated bandwidth over a candidate set.

    Candidates for which every leave-one-out window is empty are infeasible;
    ties between feasible candidates resolve to the smallest bandwidth.
    """
    if len(curve) < 3:
        raise ValueError("LS-CV needs a curve with at least 3 observations")
    candidates = np.sort(np.asarray(candidate_h, dtype=float))
    if candidates.size == 0 or np.any(candidates <= 0):
        raise ValueError("candidate bandwidths must be positive and nonempty")
    return _best_kernel_candidate(curve, candidates, kernel)[0]


def pilot_bandwidth(curve: Curve, candidate_h, kernel: Kernel) -> float:
    """Cross-validated pilot choice, with interpolation in the running.

    Returns 0.0 when leave-one-out interpolation of the raw observations
    beats every kernel candidate (the typical outcome for low-noise, densely
    observed curves); ties prefer interpolation.
    """
    if len(curve) < 3:
        raise ValueError("LS-CV needs a curve with at least 3 observations")
    candidates = np.sort(np.asarray(candidate_h, dtype=float))
    if candidates.size == 0 or np.any(candidates <= 0):
        raise ValueError("candidate bandwidths must be positive and nonempty")
    best_h, best_score = _best_kernel_candidate(curve, candidates, kernel)
    if _loo_interpolation_score(curve) <= best_score:
        return 0.0
    return best_h


def default_lscv_candidates(sample: FunctionalSample) -> np.ndarray:
    """Geometric pilot-bandwidth grid from two average spacings to 0.5."""
    lo = 2.0 / mean_observations(sample)
    if lo >= LSCV_GRID_MAX:
        return np.array([LSCV_GRID_MAX])
    return np.geomspace(lo, LSCV_GRID_MAX, LSCV_GRID_SIZE)


def presmooth_sample(
    sample: FunctionalSample,
    subset_size: int,
    kernel: Kernel,
    seed: int,
    candidate_h=None,
    max_pilot: float | None = None,
) -> list[PresmoothedCurve]:
    """Presmooth every curve with one common cross-validated bandwidth.

    A subset of ``min(subset_size, N)`` curves is drawn uniformly without
    replacement (curves with fewer than 3 observations are not eligible),
    each contributes its pilot choice (a kernel bandwidth, or 0 for plain
    interpolation), and the lower median of those is used to presmooth the
    whole sample.

    ``max_pilot`` caps the kernel candidates: increments of the presmoothed
    curves are probed at a fixed small gap downstream, and smoothing at or
    beyond that gap would erase the very fluctuations being measured.
    """
    if subset_size < 1:
        raise ValueError("subset_size must be at least 1")
    if candidate_h is None:
        candidate_h = default_lscv_candidates(sample)
    if max_pilot is not None:
        capped = np.asarray(candidate_h, dtype=float)
        capped = capped[capped <= max_pilot]
        candidate_h = capped if capped.size else np.array([max_pilot])
    eligible = [i for i, c in enumerate(sample.curves) if len(c) >= 3]
    if not eligible:
        raise InfeasibleError("no curve has the 3 observations LS-CV requires")
    rng = np.random.default_rng(seed)
    k = min(subset_size, len(eligible))
    chosen = rng.choice(np.asarray(eligible), size=k, replace=False)
    bandwidths = np.sort(
        [pilot_bandwidth(sample.curves[i], candidate_h, kernel) for i in chosen]
    )
    h_med = float(bandwidths[(k - 1) // 2])
    return [presmooth_curve(c, h_med, kernel) for c in sample]
