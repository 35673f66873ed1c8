"""Numerical laboratory for pure pursuit of an evader on a circle or an ellipse."""

from .curves import (
    EllipseShape,
    EvaderState,
    Vec2,
    circle_unit_speed,
    ellipse_const_angvel,
    ellipse_const_speed,
    ellipse_standard,
    phi_dot,
)
from .errors import CaptureError, IntegrationError, NoEquilibriumError, PursuitLabError, SingularityError
from .integrate import IntegratorSettings, Trajectory, integrate_adaptive, integrate_fixed
from .pursuit import PursuitConfig, simulate_pursuit

__version__ = "0.1.0"

__all__ = [
    "EllipseShape",
    "EvaderState",
    "Vec2",
    "circle_unit_speed",
    "ellipse_const_angvel",
    "ellipse_const_speed",
    "ellipse_standard",
    "phi_dot",
    "CaptureError",
    "IntegrationError",
    "NoEquilibriumError",
    "PursuitLabError",
    "SingularityError",
    "IntegratorSettings",
    "Trajectory",
    "integrate_adaptive",
    "integrate_fixed",
    "PursuitConfig",
    "simulate_pursuit",
]
