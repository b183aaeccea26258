"""Exception types shared across the toolkit."""

from __future__ import annotations


class MinmarchError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(MinmarchError):
    """Invalid run configuration (unknown keys, bad values, unknown problem)."""


class IndefiniteHessianError(MinmarchError):
    """The decision-space Hessian is singular or not positive definite.

    Carries the smallest eigenvalue seen at the offending point and, when
    raised during time marching, the pseudo-time ``t`` at which it happened.
    """

    def __init__(self, message: str, min_eigenvalue: float, t: float | None = None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue
        self.t = t


class StationarityError(MinmarchError):
    """Initial state handed to the marcher is not a stationary point."""


class DegenerateStepError(MinmarchError):
    """Finite-difference step so small that differencing lost all signal."""


class NominalSolveError(MinmarchError):
    """The nominal optimization solve failed; nothing meaningful to march from."""


class BvpSolveError(MinmarchError):
    """The discrete boundary value problem could not be solved."""


class DegenerateBandwidthError(MinmarchError):
    """Kernel density estimation received a zero-variance sample set."""
