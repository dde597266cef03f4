"""Adaptive functional principal components analysis.

Estimates eigenvalues and eigenfunctions of the covariance operator of
noisy, discretely observed random curves, choosing a separate data-driven
kernel bandwidth for each eigen-element by minimizing explicit plug-in risk
bounds.  A general-purpose Gaussian process simulator with prescribed local
regularity is included for validation at any scale.
"""

from .data_model import (
    Curve,
    DesignType,
    FunctionalSample,
    Grid,
    make_uniform_grid,
    mean_observations,
)
from .eigen import EigenResult, eigendecompose, sign_align
from .metrics import l2_error, metrics_report
from .moments import MomentEstimates, default_b, estimate_m2_c2, sigma2_hat
from .pipeline import FitConfig, FitResult, fit, fit_fixed_bandwidth
from .presmoothing import PresmoothedCurve, lscv_bandwidth, presmooth_sample
from .regularity import RegularityEstimate, estimate_regularity, theta_hat, triple_points
from .risk_bounds import (
    BandwidthGrid,
    BandwidthSelection,
    RiskBoundInputs,
    eigenfunction_bound,
    eigenvalue_bound,
    kernel_moment,
    select_bandwidths,
)
from .simulator import (
    DesignKind,
    DesignSpec,
    MfbmSpec,
    constant_fn,
    covariance_CA,
    d_factor,
    deformation_A,
    piecewise_linear_fn,
    simulate,
    true_eigen_elements,
)
from .smoothing import Kernel, n_gamma, nw_weights, selection_counts, smooth_at

__version__ = "0.1.0"

__all__ = [
    "BandwidthGrid",
    "BandwidthSelection",
    "Curve",
    "DesignKind",
    "DesignSpec",
    "DesignType",
    "EigenResult",
    "FitConfig",
    "FitResult",
    "FunctionalSample",
    "Grid",
    "Kernel",
    "MfbmSpec",
    "MomentEstimates",
    "PresmoothedCurve",
    "RegularityEstimate",
    "RiskBoundInputs",
    "constant_fn",
    "covariance_CA",
    "d_factor",
    "default_b",
    "deformation_A",
    "eigendecompose",
    "eigenfunction_bound",
    "eigenvalue_bound",
    "estimate_m2_c2",
    "estimate_regularity",
    "fit",
    "fit_fixed_bandwidth",
    "kernel_moment",
    "l2_error",
    "lscv_bandwidth",
    "make_uniform_grid",
    "mean_observations",
    "metrics_report",
    "n_gamma",
    "nw_weights",
    "piecewise_linear_fn",
    "presmooth_sample",
    "select_bandwidths",
    "selection_counts",
    "sigma2_hat",
    "sign_align",
    "simulate",
    "smooth_at",
    "theta_hat",
    "triple_points",
    "true_eigen_elements",
]
