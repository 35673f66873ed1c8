"""Evader curves: the ellipse under three parameterizations and the unit-speed circle.

Every curve function has the signature ``curve(param, shape) -> EvaderState``
where ``vel`` is the derivative of ``pos`` with respect to ``param``. For the
constant-speed ellipse the parameter is the velocity angle phi, not time, and
``time_vel`` carries the unit velocity with respect to time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

__all__ = [
    "Vec2",
    "EllipseShape",
    "EvaderState",
    "ellipse_standard",
    "ellipse_const_angvel",
    "ellipse_const_speed",
    "phi_dot",
    "circle_unit_speed",
    "CURVES",
    "get_curve",
    "ellipse_argument",
    "param_from_argument",
]


class Vec2(NamedTuple):
    x: float
    y: float

    def __add__(self, other):  # type: ignore[override]
        return Vec2(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Vec2(self.x - other[0], self.y - other[1])

    def scale(self, k: float) -> Vec2:
        return Vec2(k * self.x, k * self.y)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class EllipseShape:
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0) or not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"ellipse semi-axes must be positive and finite, got a={self.a}, b={self.b}")

    @property
    def is_circle(self) -> bool:
        return self.a == self.b

    def implicit(self, p) -> float:
        """x^2/a^2 + y^2/b^2, equal to 1 on the curve."""
        return (p[0] / self.a) ** 2 + (p[1] / self.b) ** 2

    def radius_at(self, angle: float) -> float:
        """Polar radius of the ellipse in direction ``angle``."""
        s, c = math.sin(angle), math.cos(angle)
        return self.a * self.b / math.sqrt(self.a**2 * s * s + self.b**2 * c * c)


class EvaderState(NamedTuple):
    param: float
    pos: Vec2
    vel: Vec2
    time_vel: Vec2


def ellipse_standard(t: float, shape: EllipseShape) -> EvaderState:
    a, b = shape.a, shape.b
    c, s = math.cos(t), math.sin(t)
    vel = Vec2(-a * s, b * c)
    return EvaderState(t, Vec2(a * c, b * s), vel, vel)


def ellipse_const_angvel(t: float, shape: EllipseShape) -> EvaderState:
    """Ellipse point whose polar angle equals ``t`` (unit angular velocity)."""
    a, b = shape.a, shape.b
    c, s = math.cos(t), math.sin(t)
    S = a * a * s * s + b * b * c * c
    r = a * b / math.sqrt(S)
    dr = -r * (a * a - b * b) * s * c / S
    vel = Vec2(dr * c - r * s, dr * s + r * c)
    return EvaderState(t, Vec2(r * c, r * s), vel, vel)


def phi_dot(phi: float, shape: EllipseShape) -> float:
    """Time derivative of the velocity angle for the unit-speed ellipse."""
    a2, b2 = shape.a**2, shape.b**2
    S = a2 * math.sin(phi) ** 2 + b2 * math.cos(phi) ** 2
    return S**1.5 / (a2 * b2)


def ellipse_const_speed(phi: float, shape: EllipseShape) -> EvaderState:
    """Unit-speed ellipse, parameterized by the direction ``phi`` of its velocity.

    ``vel`` is d(pos)/d(phi); ``time_vel`` is (cos phi, sin phi).
    """
    a2, b2 = shape.a**2, shape.b**2
    c, s = math.cos(phi), math.sin(phi)
    S = a2 * s * s + b2 * c * c
    root = math.sqrt(S)
    pos = Vec2(a2 * s / root, -b2 * c / root)
    inv_phidot = a2 * b2 / (S * root)
    return EvaderState(phi, pos, Vec2(c * inv_phidot, s * inv_phidot), Vec2(c, s))


def circle_unit_speed(t: float, a: float) -> EvaderState:
    if not a > 0:
        raise ValueError(f"circle radius must be positive, got {a}")
    u = t / a
    c, s = math.cos(u), math.sin(u)
    vel = Vec2(-s, c)
    return EvaderState(t, Vec2(a * c, a * s), vel, vel)


def _circle_curve(t: float, shape: EllipseShape) -> EvaderState:
    if not shape.is_circle:
        raise ValueError(f"circle curve needs a == b, got a={shape.a}, b={shape.b}")
    return circle_unit_speed(t, shape.a)


Curve = Callable[[float, EllipseShape], EvaderState]

CURVES: dict[str, Curve] = {
    "standard": ellipse_standard,
    "angvel": ellipse_const_angvel,
    "arclen": ellipse_const_speed,
    "circle": _circle_curve,
}

# Parameter value at which each curve sits on (a, 0).
START_PARAM = {"standard": 0.0, "angvel": 0.0, "arclen": math.pi / 2, "circle": 0.0}


def get_curve(curve: str | Curve) -> Curve:
    if callable(curve):
        return curve
    try:
        return CURVES[curve]
    except KeyError:
        raise ValueError(f"unknown curve {curve!r}; choose from {sorted(CURVES)}") from None


def ellipse_argument(pos, shape: EllipseShape) -> float:
    """Eccentric angle psi with pos = (a cos psi, b sin psi), in (-pi, pi]."""
    return math.atan2(pos[1] / shape.b, pos[0] / shape.a)


def param_from_argument(kind: str, psi: float, shape: EllipseShape, near: float | None = None) -> float:
    """Parameter of curve ``kind`` that lands on the eccentric angle ``psi``.

    The raw value lies in (-pi, pi]; when ``near`` is given it is shifted by a
    multiple of 2*pi (2*pi*a for the circle) to the branch closest to ``near``.
    """
    a, b = shape.a, shape.b
    if kind == "standard":
        p, period = psi, 2 * math.pi
    elif kind == "angvel":
        p, period = math.atan2(b * math.sin(psi), a * math.cos(psi)), 2 * math.pi
    elif kind == "arclen":
        p, period = math.atan2(math.cos(psi) / a, -math.sin(psi) / b), 2 * math.pi
    elif kind == "circle":
        p, period = a * psi, 2 * math.pi * a
    else:
        raise ValueError(f"unknown curve {kind!r}")
    if near is not None:
        p += period * round((near - p) / period)
    return p
