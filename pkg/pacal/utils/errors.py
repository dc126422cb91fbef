"""
Exception hierarchy shared by the numerical modules, the CLI and the HTTP service.

Every error carries the process exit code the CLI reports for it.
"""

from typing import Any, Dict, Optional, Sequence


class PacalError(Exception):
    exit_code = 1


class UsageError(PacalError):
    """Bad arguments: dimension mismatch, invalid parameters, unsupported options."""

    exit_code = 2


class ConfigError(UsageError):
    """The run configuration could not be read or failed validation."""


class DomainError(PacalError):
    """A point left the chart's box domain."""

    exit_code = 3

    def __init__(self, message: str, point: Optional[Sequence[float]] = None):
        super().__init__(message)
        self.point = None if point is None else tuple(float(x) for x in point)


class DomainExitError(DomainError):
    """A displacement, path step or integration stage left the domain."""

    def __init__(
        self,
        message: str,
        point: Optional[Sequence[float]] = None,
        step_index: Optional[int] = None,
        parameter: Optional[float] = None,
    ):
        super().__init__(message, point)
        self.step_index = step_index
        self.parameter = parameter


class NumericError(PacalError):
    """Singular frames and other floating-point breakdowns."""

    exit_code = 3


class LimitFailure(NumericError):
    """A difference-quotient limit did not converge."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None, side: Optional[str] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
        self.side = side


class IdentityViolation(NumericError):
    """Two formulas for the same quantity disagreed beyond tolerance."""


class VerificationFailure(PacalError):
    exit_code = 4
