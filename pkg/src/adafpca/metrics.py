"""Comparison measures against known eigen-elements.

Eigenvalues are compared by absolute error and eigenfunctions by the L2 grid
quadrature distance after sign alignment; both are expressed relative to a
fixed-bandwidth baseline via error ratios (below one means the adaptive
estimate wins).
"""

from __future__ import annotations

import numpy as np

from .data_model import Grid
from .eigen import sign_align


def l2_error(psi_hat: np.ndarray, psi_true: np.ndarray, grid: Grid) -> float:
    """Quadrature L2 distance after aligning the sign of ``psi_hat``."""
    psi_hat = np.asarray(psi_hat, dtype=float)
    psi_true = np.asarray(psi_true, dtype=float)
    if psi_hat.shape != psi_true.shape or len(psi_hat) != len(grid):
        raise ValueError("eigenfunction arrays must match the grid length")
    aligned = sign_align(psi_hat, psi_true, grid)
    diff = aligned - psi_true
    return float(np.sqrt(grid.integrate(diff * diff)))


def eigen_errors(
    eigenvalues: np.ndarray,
    eigenfunctions: np.ndarray,
    true_eigenvalues: np.ndarray,
    true_eigenfunctions: np.ndarray,
    grid: Grid,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-element absolute eigenvalue errors and sign-aligned L2 errors."""
    j = len(eigenvalues)
    lam_err = np.abs(np.asarray(eigenvalues) - np.asarray(true_eigenvalues)[:j])
    psi_err = np.array(
        [
            l2_error(eigenfunctions[i], true_eigenfunctions[i], grid)
            for i in range(j)
        ]
    )
    return lam_err, psi_err


def error_ratio(numerator: float, denominator: float) -> float | None:
    """Error ratio with the 0/0 case reported as missing (None)."""
    if numerator == 0.0 and denominator == 0.0:
        return None
    if denominator == 0.0:
        return float("inf")
    return float(numerator / denominator)


def error_ratios(numerators, denominators) -> list[float | None]:
    return [error_ratio(float(a), float(b)) for a, b in zip(numerators, denominators)]


def metrics_report(
    eigenvalues,
    eigenfunctions,
    baseline_eigenvalues,
    baseline_eigenfunctions,
    true_eigenvalues,
    true_eigenfunctions,
    grid: Grid,
    baseline_h: float,
    timings: dict | None = None,
) -> dict:
    """Assemble the per-element error and ratio report as a plain dict."""
    lam_err, psi_err = eigen_errors(
        eigenvalues, eigenfunctions, true_eigenvalues, true_eigenfunctions, grid
    )
    base_lam_err, base_psi_err = eigen_errors(
        baseline_eigenvalues,
        baseline_eigenfunctions,
        true_eigenvalues,
        true_eigenfunctions,
        grid,
    )
    report = {
        "schema_version": 1,
        "kind": "metrics",
        "J": len(lam_err),
        "baseline_h": float(baseline_h),
        "lambda_abs_error": [float(v) for v in lam_err],
        "psi_l2_error": [float(v) for v in psi_err],
        "baseline_lambda_abs_error": [float(v) for v in base_lam_err],
        "baseline_psi_l2_error": [float(v) for v in base_psi_err],
        "lambda_ratio": error_ratios(lam_err, base_lam_err),
        "psi_ratio": error_ratios(psi_err, base_psi_err),
    }
    if timings is not None:
        report["timings"] = {k: float(v) for k, v in timings.items()}
    return report
