"""Exception taxonomy shared across the package.

Errors that a sweep is expected to survive (non-controllable configurations,
precision exhaustion at a single grid point) carry enough structure for the
caller to log and continue.
"""

from __future__ import annotations


class HeatpointError(Exception):
    """Base class for all package errors."""


class InvalidIntervalError(HeatpointError, ValueError):
    """Observation/control region leaves (0, 1) or has nonpositive width."""


class HorizonMismatchError(HeatpointError, ValueError):
    """Control defined on a different time horizon than the evolution."""


class PrecisionExhaustedError(HeatpointError):
    """A certified digit cannot be produced at the configured precision.

    Raised instead of returning silently wrong values: e.g. argument
    reduction of n*x0 hits the uncertainty radius of a decimal anchor, a
    continued-fraction quotient is no longer determined by the stored
    digits, or an eigensolve fails to converge at the working precision.
    """

    def __init__(self, message: str, *, bits: int | None = None):
        super().__init__(message)
        self.bits = bits


class SingularMatrixError(HeatpointError):
    """Full-pivot elimination met a pivot at roundoff scale."""

    def __init__(self, message: str, *, pivot_ratio=None):
        super().__init__(message)
        # largest/smallest pivot magnitude seen before failure, for reporting
        self.pivot_ratio = pivot_ratio


class NotControllableError(HeatpointError):
    """Base class for structured non-controllability signals."""

    def __init__(self, message: str, *, mode: int | None = None):
        super().__init__(message)
        self.mode = mode


class ProfileNotControllableError(NotControllableError):
    """Interval profile has zero coupling on a mode carried by the datum."""


class PointwiseNotControllableError(NotControllableError):
    """Anchor point resonates with a mode carried by the datum."""


class TruncationNotControllableError(NotControllableError):
    """Truncated Gramian is singular; no control exists at this order."""


class ConstructionFailedError(HeatpointError):
    """Rejection sampling exhausted its budget while building a sequence."""

    def __init__(self, message: str, *, level: int | None = None, excluded_measure=None):
        super().__init__(message)
        self.level = level
        self.excluded_measure = excluded_measure


class ConfigError(HeatpointError, ValueError):
    """Experiment configuration failed validation."""
