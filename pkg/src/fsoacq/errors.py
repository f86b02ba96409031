"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class FsoAcqError(Exception):
    """Base class for all package errors."""


class ParameterError(FsoAcqError, ValueError):
    """One or more system parameters violate their invariants.

    ``violations`` holds ``(field, message)`` pairs, one per broken invariant.
    """

    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = list(violations)
        text = "; ".join(f"{name}: {msg}" for name, msg in self.violations)
        super().__init__(text or "invalid parameters")

    @property
    def fields(self) -> list[str]:
        return [name for name, _ in self.violations]


class GeometricInfeasibilityError(ParameterError):
    """The FSO footprint cannot contain the UAV aperture (rho_uav >= rho_f)."""


class ConfigError(FsoAcqError, ValueError):
    """Malformed config file, unknown key, or unparsable value."""


class DomainError(FsoAcqError, ValueError):
    """A numeric routine was called outside its mathematical domain."""


class ConvergenceError(FsoAcqError, ArithmeticError):
    """Adaptive quadrature ran out of subdivisions.

    The best available estimate and its error bound are kept on the exception.
    """

    def __init__(self, message: str, estimate: float, error: float):
        super().__init__(f"{message} (estimate={estimate!r}, error={error!r})")
        self.estimate = estimate
        self.error = error


class NonTerminationError(FsoAcqError, RuntimeError):
    """A simulated acquisition exceeded its attempt cap (p_N is effectively 0)."""


class NoFeasiblePointError(FsoAcqError, ArithmeticError):
    """Every candidate of an optimization problem is infeasible or uninformative."""
