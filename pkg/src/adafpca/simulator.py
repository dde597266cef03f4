"""Gaussian process simulator with prescribed local regularity.

Paths are drawn from a time-deformed multifractional Brownian motion: a
centered Gaussian process whose covariance is evaluated in closed form at the
observation times, so arbitrary exponent functions ``H``, constant functions
``L``, and optionally a target variance function can be matched exactly.
Heteroscedastic noise is added on top, giving observation pairs ``(T, Y)``
per curve.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .covariance import CovarianceEstimate
from .data_model import Curve, DesignType, FunctionalSample, make_uniform_grid
from .eigen import EigenResult, eigendecompose
from .errors import IllConditionedCovariance

SIMPSON_SUBINTERVALS = 1000
JITTER_LADDER = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8)

# noise-scale presets: low noise, and signal-to-noise divided by four
SIGMA0_LOW = 0.25
SIGMA0_HIGH = 1.0


def constant_fn(c: float) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized constant function."""
    c = float(c)

    def fn(t):
        return np.full_like(np.asarray(t, dtype=float), c)

    return fn


def piecewise_linear_fn(ts, vs) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized piecewise-linear interpolant of a value table."""
    ts = np.asarray(ts, dtype=float)
    vs = np.asarray(vs, dtype=float)
    if ts.ndim != 1 or ts.shape != vs.shape or len(ts) < 2:
        raise ValueError("a value table needs matching 1-d arrays of length >= 2")
    if np.any(np.diff(ts) <= 0):
        raise ValueError("table abscissae must be strictly increasing")

    def fn(t):
        return np.interp(np.asarray(t, dtype=float), ts, vs)

    return fn


@dataclass
class MfbmSpec:
    """Target process: exponent/constant functions, mean, and noise model.

    ``H`` maps into (0, 1), ``L`` is positive, and ``m2_target`` (optional)
    prescribes the variance function; when it is set, ``A0`` must be positive
    because the deformation is then multiplicative.  The observation noise
    standard deviation is ``sigma0 * sigma(t)``.  All functions must accept
    numpy arrays.
    """

    H: Callable[[np.ndarray], np.ndarray]
    L: Callable[[np.ndarray], np.ndarray]
    mu: Callable[[np.ndarray], np.ndarray]
    sigma: Callable[[np.ndarray], np.ndarray]
    sigma0: float = SIGMA0_LOW
    A0: float = 0.0
    m2_target: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.A0 < 0:
            raise ValueError("A0 must be nonnegative")
        if self.m2_target is not None and self.A0 <= 0:
            raise ValueError("a variance target requires A0 > 0")
        if self.sigma0 < 0:
            raise ValueError("sigma0 must be nonnegative")


class DesignKind(enum.Enum):
    """Observation designs supported by the simulator."""

    INDEPENDENT_UNIFORM_POISSON = "independent"
    COMMON_EQUISPACED = "common"


@dataclass(frozen=True)
class DesignSpec:
    """Sampling design: number of curves and per-curve point counts."""

    kind: DesignKind
    n_curves: int
    mean_points: int

    def __post_init__(self):
        if self.n_curves < 2:
            raise ValueError("need at least two curves")
        if self.mean_points < 2:
            raise ValueError("need a mean of at least two points per curve")


def d_factor(x, y):
    """Normalization of the variable-exponent covariance, via log-Gamma.

    Symmetric in its arguments, and identically 1/2 on the diagonal.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    log_num = 0.5 * (
        gammaln(2.0 * x + 1.0)
        + gammaln(2.0 * y + 1.0)
        + np.log(np.sin(np.pi * x))
        + np.log(np.sin(np.pi * y))
    )
    log_den = np.log(2.0) + gammaln(x + y + 1.0) + np.log(np.sin(np.pi * (x + y) / 2.0))
    out = np.exp(log_num - log_den)
    return out if out.ndim else float(out)


def _deformation_integrals(spec: MfbmSpec, ts: np.ndarray) -> np.ndarray:
    """Composite-Simpson integrals of the deformation integrand over [0, t].

    With a variance target the integrand is ``(L / sqrt(m2))^(1/H)``: this is
    the unique multiplicative deformation for which the scaled process keeps
    the prescribed exponent/constant pair and has variance exactly ``m2``.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    n = SIMPSON_SUBINTERVALS
    x = np.linspace(0.0, 1.0, n + 1)
    s = ts[:, None] * x[None, :]
    flat = s.reshape(-1)
    h_vals = spec.H(flat)
    l_vals = spec.L(flat)
    if spec.m2_target is None:
        integrand = l_vals ** (1.0 / h_vals)
    else:
        integrand = (l_vals / np.sqrt(spec.m2_target(flat))) ** (1.0 / h_vals)
    integrand = integrand.reshape(s.shape)
    simpson_w = np.full(n + 1, 2.0)
    simpson_w[1::2] = 4.0
    simpson_w[0] = simpson_w[-1] = 1.0
    return (ts / (3.0 * n)) * (integrand @ simpson_w)


def deformation_A(spec: MfbmSpec, t: float) -> float:
    """Deformed time ``A(t)``: additive without a variance target, else multiplicative."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    integral = float(_deformation_integrals(spec, np.array([t]))[0])
    if spec.m2_target is None:
        return spec.A0 + integral
    return spec.A0 * float(np.exp(integral))


def _deformation_and_scale(spec: MfbmSpec, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``A(t)`` and the scaling ``tau(t)`` at many points."""
    ts = np.asarray(ts, dtype=float)
    integrals = _deformation_integrals(spec, ts)
    if spec.m2_target is None:
        return spec.A0 + integrals, np.ones_like(ts)
    a = spec.A0 * np.exp(integrals)
    tau = np.sqrt(spec.m2_target(ts)) * a ** (-spec.H(ts))
    return a, tau


def covariance_matrix(spec: MfbmSpec, ts: np.ndarray) -> np.ndarray:
    """Process covariance evaluated at all pairs of the given points."""
    ts = np.asarray(ts, dtype=float)
    a, tau = _deformation_and_scale(spec, ts)
    h = spec.H(ts)
    h_sum = h[:, None] + h[None, :]
    d = d_factor(h[:, None], h[None, :])
    powers = (
        a[:, None] ** h_sum
        + a[None, :] ** h_sum
        - np.abs(a[None, :] - a[:, None]) ** h_sum
    )
    cov = tau[:, None] * tau[None, :] * d * powers
    return (cov + cov.T) / 2.0


def covariance_CA(spec: MfbmSpec, s: float, t: float) -> float:
    """Process covariance between times ``s`` and ``t``."""
    return float(covariance_matrix(spec, np.array([s, t]))[0, 1])


def _cholesky_with_jitter(matrix: np.ndarray) -> np.ndarray:
    """Cholesky factor with escalating diagonal jitter.

    Covariances evaluated at close-together points are near singular; the
    jitter magnitudes stay far below the noise floor of any experiment.
    """
    for jitter in JITTER_LADDER:
        try:
            bumped = matrix if jitter == 0.0 else matrix + jitter * np.eye(len(matrix))
            return np.linalg.cholesky(bumped)
        except np.linalg.LinAlgError:
            continue
    raise IllConditionedCovariance(
        f"covariance factorization failed for a {matrix.shape[0]}x"
        f"{matrix.shape[0]} matrix even with jitter up to {JITTER_LADDER[-1]:g}"
    )


def simulate(spec: MfbmSpec, design: DesignSpec, seed: int) -> FunctionalSample:
    """Draw a functional sample of noisy curves from the target process.

    Each curve has its own random substream derived from ``(seed, curve)``,
    so parallel generation reproduces serial output exactly.  Independent
    designs draw the number of points from a Poisson distribution (redrawing
    values below 2) and the times uniformly; common designs share one
    equispaced grid whose covariance factor is computed once.
    """
    root = np.random.SeedSequence(seed)
    children = root.spawn(design.n_curves)
    curves = []
    if design.kind is DesignKind.COMMON_EQUISPACED:
        times = np.linspace(0.0, 1.0, design.mean_points)
        factor = _cholesky_with_jitter(covariance_matrix(spec, times))
        mean = spec.mu(times)
        noise_sd = spec.sigma0 * spec.sigma(times)
        for i in range(design.n_curves):
            rng = np.random.default_rng(children[i])
            x = mean + factor @ rng.standard_normal(len(times))
            y = x + noise_sd * rng.standard_normal(len(times))
            curves.append(Curve(id=i, times=times, values=y))
        return FunctionalSample(curves=tuple(curves), design=DesignType.COMMON)

    for i in range(design.n_curves):
        rng = np.random.default_rng(children[i])
        m_i = 0
        while m_i < 2:
            m_i = int(rng.poisson(design.mean_points))
        times = np.sort(rng.uniform(0.0, 1.0, size=m_i))
        factor = _cholesky_with_jitter(covariance_matrix(spec, times))
        x = spec.mu(times) + factor @ rng.standard_normal(m_i)
        y = x + spec.sigma0 * spec.sigma(times) * rng.standard_normal(m_i)
        curves.append(Curve(id=i, times=times, values=y))
    return FunctionalSample(curves=tuple(curves), design=DesignType.INDEPENDENT)


def true_eigen_elements(spec: MfbmSpec, J: int, n_grid: int = 501) -> EigenResult:
    """Eigen-pairs of the analytic covariance on a high-resolution grid."""
    grid = make_uniform_grid(n_grid)
    matrix = covariance_matrix(spec, grid.points)
    cov = CovarianceEstimate(
        grid=grid,
        gamma_matrix=matrix,
        h_used=0.0,
        b_used=np.nan,
        correction_matrix=np.zeros_like(matrix),
    )
    return eigendecompose(cov, J)


def truth_on_grid(
    spec: MfbmSpec, J: int, grid, n_high: int = 501
) -> tuple[np.ndarray, np.ndarray]:
    """True eigen-elements sampled onto an output grid.

    The high-resolution eigenfunctions are interpolated onto ``grid`` and
    renormalized under its quadrature, so comparisons on the output grid use
    unit-norm references.
    """
    high = true_eigen_elements(spec, J, n_grid=n_high)
    psi = np.empty((J, len(grid)))
    for j in range(J):
        f = np.interp(grid.points, high.grid.points, high.eigenfunctions[j])
        psi[j] = f / np.sqrt(grid.integrate(f * f))
    return high.eigenvalues.copy(), psi
