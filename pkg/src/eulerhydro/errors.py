"""Exception types shared across the package."""

from __future__ import annotations


class EulerHydroError(Exception):
    pass


class ConfigurationError(EulerHydroError, ValueError):
    """Inputs are well-typed but mutually inconsistent or unsupported."""


class DomainError(EulerHydroError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class RejectedJumpError(EulerHydroError):
    def __init__(self, site: int, reason: str):
        super().__init__(f"jump rejected at site {site}: {reason}")
        self.site = site
        self.reason = reason


class OutOfWindowError(EulerHydroError, IndexError):
    pass


class EventBudgetExceeded(EulerHydroError):
    """Raised when a run hits its event cap; carries the partial result."""

    def __init__(self, reached_time: float, partial=None):
        super().__init__(f"event budget exhausted at t={reached_time:.6g}")
        self.reached_time = reached_time
        self.partial = partial


class UndefinedRateError(EulerHydroError, ZeroDivisionError):
    pass


class NoninteractionError(EulerHydroError, ValueError):
    """Evolution time exceeds the window in which Riemann fans stay disjoint."""


class InfeasibilityError(EulerHydroError, ValueError):
    def __init__(self, message: str, cell=None):
        super().__init__(message)
        self.cell = cell
