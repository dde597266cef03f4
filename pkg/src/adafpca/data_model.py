"""Containers for discretely observed functional data and evaluation grids.

A :class:`Curve` holds the observation pairs ``(times, values)`` of one noisy
sample path on ``[0, 1]``; a :class:`FunctionalSample` bundles curves together
with the design type (per-curve random times vs. one shared grid); a
:class:`Grid` couples evaluation points with trapezoid quadrature weights.
All containers are frozen and their arrays are marked read-only, so they can
be shared freely across workers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


def _readonly_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


class DesignType(enum.Enum):
    """Observation-time design: random per curve, or one shared grid."""

    INDEPENDENT = "independent"
    COMMON = "common"


@dataclass(frozen=True)
class Curve:
    """Observations ``(times, values)`` of one curve.

    Parameters
    ----------
    id : int
        Identifier, unique within a sample.
    times : array-like
        Strictly increasing observation times in ``[0, 1]``.
    values : array-like
        Observed (noisy) values, same length as ``times``.
    """

    id: int
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = _readonly_array(self.times, "times")
        values = _readonly_array(self.values, "values")
        if len(times) != len(values):
            raise ValueError("times and values must have equal length")
        if len(times) < 1:
            raise ValueError("a curve needs at least one observation")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        if times[0] < 0.0 or times[-1] > 1.0:
            raise ValueError("times must lie in [0, 1]")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.times)


@dataclass(frozen=True)
class FunctionalSample:
    """A sample of N >= 2 curves plus design metadata."""

    curves: tuple[Curve, ...]
    design: DesignType = DesignType.INDEPENDENT
    domain_length: float = 1.0

    def __post_init__(self):
        curves = tuple(self.curves)
        if len(curves) < 2:
            raise ValueError("a functional sample needs at least two curves")
        if self.domain_length <= 0:
            raise ValueError("domain_length must be positive")
        if self.design is DesignType.COMMON:
            ref = curves[0].times
            for c in curves[1:]:
                if len(c.times) != len(ref) or not np.array_equal(c.times, ref):
                    raise ValueError(
                        "common design requires an identical time grid "
                        "on every curve"
                    )
        object.__setattr__(self, "curves", curves)

    @property
    def n_curves(self) -> int:
        return len(self.curves)

    @property
    def counts(self) -> np.ndarray:
        """Number of observations per curve."""
        return np.array([len(c) for c in self.curves])

    def __iter__(self):
        return iter(self.curves)

    def __len__(self) -> int:
        return len(self.curves)


@dataclass(frozen=True)
class Grid:
    """Evaluation points with quadrature weights (trapezoid by default)."""

    points: np.ndarray
    quad_weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        points = _readonly_array(self.points, "points")
        weights = _readonly_array(self.quad_weights, "quad_weights")
        if len(points) != len(weights):
            raise ValueError("points and quad_weights must have equal length")
        if np.any(np.diff(points) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if np.any(weights < 0):
            raise ValueError("quadrature weights must be nonnegative")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "quad_weights", weights)

    def __len__(self) -> int:
        return len(self.points)

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature integral of grid-sampled values."""
        return float(np.sum(self.quad_weights * np.asarray(values, dtype=float)))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        """Quadrature inner product of two grid-sampled functions."""
        return float(np.sum(self.quad_weights * np.asarray(f) * np.asarray(g)))


def make_uniform_grid(n_points: int, domain_length: float = 1.0) -> Grid:
    """Equally spaced grid on ``[0, domain_length]`` with trapezoid weights.

    The weights are ``delta/2`` at the endpoints and ``delta`` inside, so they
    sum to ``domain_length``.
    """
    if n_points < 2:
        raise ValueError("a grid needs at least two points")
    points = np.linspace(0.0, domain_length, n_points)
    delta = domain_length / (n_points - 1)
    weights = np.full(n_points, delta)
    weights[0] = weights[-1] = delta / 2.0
    return Grid(points=points, quad_weights=weights)


def mean_observations(sample: FunctionalSample) -> float:
    """Average number of observations per curve."""
    return float(np.mean(sample.counts))
