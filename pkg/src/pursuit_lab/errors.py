"""Exception hierarchy shared by the whole package."""

from __future__ import annotations


class PursuitLabError(Exception):
    """Base class for every error raised by pursuit_lab."""


class IntegrationError(PursuitLabError):
    """Numerical failure inside an integrator (non-finite state, step underflow)."""

    def __init__(self, message: str, t: float | None = None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class CaptureError(PursuitLabError):
    """Pursuer and evader coincide, so the pursuit direction is undefined."""


class SingularityError(PursuitLabError):
    """A right-hand side was evaluated on its singular set."""

    def __init__(self, message: str, where: float | None = None):
        super().__init__(message)
        self.where = where


class NoEquilibriumError(PursuitLabError, ValueError):
    """The circular reduced system has no equilibrium for this speed ratio."""
