"""Eigen-decomposition of a grid-evaluated covariance via quadrature.

The integral eigenproblem is discretized with the grid's quadrature weights:
with ``D = diag(weights)`` the symmetric matrix ``D^(1/2) G D^(1/2)`` is
decomposed and eigenvectors are mapped back through ``D^(-1/2)``, which makes
the returned eigenfunctions orthonormal under the quadrature inner product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceEstimate
from .data_model import Grid


@dataclass(frozen=True)
class EigenResult:
    """Leading eigen-pairs of one covariance estimate.

    ``eigenvalues`` are reported nonnegative (negatives truncated to zero);
    ``raw_eigenvalues`` keeps the untruncated values for diagnostics.  Each
    eigenfunction satisfies the positive-integral sign convention unless an
    alignment reference was supplied.
    """

    grid: Grid
    eigenvalues: np.ndarray
    raw_eigenvalues: np.ndarray
    eigenfunctions: np.ndarray
    h_used: float
    alignment_reference: np.ndarray | None = None


def sign_align(psi: np.ndarray, reference: np.ndarray, grid: Grid) -> np.ndarray:
    """Flip ``psi`` so its quadrature inner product with ``reference`` is >= 0.

    A zero inner product falls back to making the first grid value
    nonnegative, which keeps the convention deterministic.
    """
    psi = np.asarray(psi, dtype=float)
    inner = grid.inner(psi, np.asarray(reference, dtype=float))
    if inner > 0:
        return psi
    if inner < 0:
        return -psi
    return -psi if psi[0] < 0 else psi


def _default_sign(psi: np.ndarray, weights: np.ndarray) -> np.ndarray:
    integral = float(np.sum(weights * psi))
    if integral > 0:
        return psi
    if integral < 0:
        return -psi
    return -psi if psi[0] < 0 else psi


def eigendecompose(cov: CovarianceEstimate, J: int) -> EigenResult:
    """Top ``J`` eigen-pairs of a covariance estimate.

    Eigenvalues are sorted nonincreasing; eigenfunctions have unit quadrature
    norm and the default sign convention (nonnegative integral, ties broken
    at the first grid point).
    """
    grid = cov.grid
    if not 1 <= J <= len(grid):
        raise ValueError("J must satisfy 1 <= J <= grid size")
    weights = grid.quad_weights
    if np.any(weights <= 0):
        raise ValueError("quadrature weights must be strictly positive")
    sqrt_w = np.sqrt(weights)
    symmetrized = cov.gamma_matrix * sqrt_w[:, None] * sqrt_w[None, :]
    symmetrized = (symmetrized + symmetrized.T) / 2.0
    eigvals, eigvecs = np.linalg.eigh(symmetrized)
    order = np.argsort(eigvals)[::-1][:J]
    raw = eigvals[order]
    funcs = eigvecs[:, order].T / sqrt_w[None, :]
    funcs = np.array([_default_sign(f, weights) for f in funcs])
    return EigenResult(
        grid=grid,
        eigenvalues=np.maximum(raw, 0.0),
        raw_eigenvalues=raw,
        eigenfunctions=funcs,
        h_used=cov.h_used,
    )
