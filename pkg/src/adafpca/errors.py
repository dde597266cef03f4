"""Exception types shared across the package.

Errors are split by how a caller should react: ``ParseError`` means a file
could not be understood, ``InfeasibleError`` means the data/configuration
cannot support the requested estimation, and ``NumericalError`` means a
numerical routine failed on otherwise valid input.
"""

from __future__ import annotations


class AdafpcaError(Exception):
    """Base class. ``stage`` identifies the pipeline stage that raised."""

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage

    def __str__(self) -> str:
        base = super().__str__()
        return f"[{self.stage}] {base}" if self.stage else base


class ParseError(AdafpcaError):
    """A data, config, scenario, or result file is malformed."""


class InfeasibleError(AdafpcaError):
    """The requested estimation is infeasible for the given data."""


class NoCurvesSelected(InfeasibleError):
    """No curve has an observation inside the kernel window."""


class EmptyNoiseWindow(InfeasibleError):
    """No curve qualifies for the noise-variance estimate at this point."""


class BandwidthGridTooSmall(InfeasibleError):
    """Every pilot bandwidth candidate leaves all windows empty."""


class DesignTooSparse(InfeasibleError):
    """Every bandwidth in the selection grid is infeasible."""


class InfeasibleBandwidth(InfeasibleError):
    """The given bandwidth leaves some grid pair without enough curves."""


class NumericalError(AdafpcaError):
    """A numerical routine failed (factorization, degenerate spectrum)."""


class IllConditionedCovariance(NumericalError):
    """Covariance factorization failed even after jitter escalation."""


class DegenerateSpectrum(NumericalError):
    """Proxy eigenvalue gap is exactly zero for some element."""
