"""Reduced (rho, zeta) pursuit dynamics with a unit-speed evader.

rho is the pursuer-evader distance and zeta = Theta - theta the angle between
the evader's and the pursuer's velocity directions:

    rho'  = cos(zeta) - n
    zeta' = -sin(zeta)/rho + Theta'

For a circle of radius a, Theta' = 1/a and the system is autonomous with a
stable equilibrium when n < 1. For the ellipse Theta is the velocity angle
phi of the constant-speed parameterization and Theta' = phi_dot(phi), so phi
is carried as a third state. zeta is never wrapped here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .curves import EllipseShape, Vec2, circle_unit_speed, ellipse_const_speed, phi_dot
from .errors import CaptureError, NoEquilibriumError, SingularityError
from .integrate import IntegratorSettings, OdeSystem, Trajectory

__all__ = [
    "DynState",
    "EquilibriumReport",
    "dds_rhs",
    "dds_rhs_circle",
    "dds_rhs_ellipse",
    "equilibrium_circle",
    "jacobian_circle",
    "eigenvalues_circle",
    "classify_equilibrium",
    "equilibrium_report",
    "reconstruct_pursuer",
    "zeta_second_order_rhs",
    "f_and_logderiv_ellipse",
    "DynRun",
    "integrate_circle_dds",
    "integrate_ellipse_dds",
    "integrate_zeta_theta",
    "initial_state_from_positions",
    "SINGULAR_FLOOR",
    "NODE_SPIRAL_BOUNDARY",
]

SINGULAR_FLOOR = 1e-8
NODE_SPIRAL_BOUNDARY = 2 / math.sqrt(5)
CLASS_TOL = 1e-12


class DynState(NamedTuple):
    rho: float
    zeta: float
    phi: float | None = None


@dataclass(frozen=True)
class EquilibriumReport:
    rho_star: float
    zeta_star: float
    jacobian: np.ndarray
    eigenvalues: tuple[complex, complex]
    stability: str

    def as_dict(self) -> dict:
        return {
            "rho_star": self.rho_star,
            "zeta_star": self.zeta_star,
            "class": self.stability,
            "jacobian": self.jacobian.tolist(),
            "eigenvalues": [{"re": z.real, "im": z.imag} for z in self.eigenvalues],
        }


def dds_rhs(state, theta_dot: float, n: float) -> tuple[float, float]:
    rho, zeta = state[0], state[1]
    if not rho > 0:
        raise CaptureError(f"reduced system is singular at rho={rho!r}")
    return math.cos(zeta) - n, -math.sin(zeta) / rho + theta_dot


def dds_rhs_circle(state, n: float, a: float) -> tuple[float, float]:
    if not a > 0:
        raise ValueError(f"circle radius must be positive, got {a}")
    return dds_rhs(state, 1.0 / a, n)


def dds_rhs_ellipse(state, n: float, shape: EllipseShape) -> tuple[float, float, float]:
    phi = state[2]
    w = phi_dot(phi, shape)
    rho_dot, zeta_dot = dds_rhs(state, w, n)
    return rho_dot, zeta_dot, w


def _check_ratio(n: float) -> None:
    if not n > 0:
        raise ValueError(f"speed ratio n must be positive, got {n}")
    if n >= 1:
        raise NoEquilibriumError(f"no equilibrium for n >= 1 (got n={n})")


def equilibrium_circle(n: float, a: float) -> tuple[float, float]:
    _check_ratio(n)
    if not a > 0:
        raise ValueError(f"circle radius must be positive, got {a}")
    return a * math.sqrt(1 - n * n), math.acos(n)


def jacobian_circle(n: float, a: float) -> np.ndarray:
    _check_ratio(n)
    s = math.sqrt(1 - n * n)
    return np.array([[0.0, -s], [1 / (a * a * s), -n / (a * s)]])


def eigenvalues_circle(n: float, a: float) -> tuple[complex, complex]:
    """Closed-form eigenvalues (lambda_+, lambda_-) of the circular Jacobian."""
    _check_ratio(n)
    d = 2 * a * math.sqrt(1 - n * n)
    disc = 5 * n * n - 4
    re = -n / d
    if disc >= 0:
        r = math.sqrt(disc) / d
        return complex(re + r, 0.0), complex(re - r, 0.0)
    im = math.sqrt(-disc) / d
    return complex(re, im), complex(re, -im)


def classify_equilibrium(n: float) -> str:
    _check_ratio(n)
    if abs(n - NODE_SPIRAL_BOUNDARY) <= CLASS_TOL:
        return "degenerate-double-root"
    return "stable-spiral" if n < NODE_SPIRAL_BOUNDARY else "stable-node"


def equilibrium_report(n: float, a: float) -> EquilibriumReport:
    rho, zeta = equilibrium_circle(n, a)
    return EquilibriumReport(rho, zeta, jacobian_circle(n, a), eigenvalues_circle(n, a),
                             classify_equilibrium(n))


def reconstruct_pursuer(evader_pos, Theta: float, state) -> Vec2:
    """Pursuer position P = E - rho*(cos theta, sin theta) with theta = Theta - zeta."""
    rho, zeta = state[0], state[1]
    theta = Theta - zeta
    return Vec2(evader_pos[0] - rho * math.cos(theta), evader_pos[1] - rho * math.sin(theta))


def initial_state_from_positions(evader_pos, Theta: float, pursuer_pos) -> DynState:
    """(rho, zeta) for a pursuer at ``pursuer_pos`` chasing an evader heading ``Theta``."""
    dx, dy = evader_pos[0] - pursuer_pos[0], evader_pos[1] - pursuer_pos[1]
    return DynState(math.hypot(dx, dy), Theta - math.atan2(dy, dx))


def zeta_second_order_rhs(zeta, zeta_p, Theta, f, f_p, n, singular_floor=SINGULAR_FLOOR) -> float:
    """zeta'' of the single second-order equation in Theta, with f = 1/Theta'."""
    s = math.sin(zeta)
    if abs(s) <= singular_floor:
        raise SingularityError(f"sin(zeta) vanishes at Theta={Theta!r}", Theta)
    if not f > 0:
        raise ValueError(f"f = 1/Theta' must be positive, got {f}")
    c = math.cos(zeta)
    q = 1.0 - zeta_p
    return (q * q * (c - n) * f - (f_p * s + f * zeta_p * c) * q) / (f * s)


def f_and_logderiv_ellipse(phi: float, shape: EllipseShape) -> tuple[float, float]:
    a2, b2 = shape.a**2, shape.b**2
    s, c = math.sin(phi), math.cos(phi)
    return 1.0 / phi_dot(phi, shape), -3 * (a2 - b2) * s * c / (a2 * s * s + b2 * c * c)


# --- integration ------------------------------------------------------------

@dataclass
class DynRun:
    """Integrated reduced system. Columns of ``traj.y`` are rho, zeta[, phi]."""

    traj: Trajectory
    n: float
    shape: EllipseShape
    elliptical: bool
    capture_t: float | None = None

    @property
    def t(self) -> np.ndarray:
        return self.traj.t

    @property
    def rho(self) -> np.ndarray:
        return self.traj.y[:, 0]

    @property
    def zeta(self) -> np.ndarray:
        return self.traj.y[:, 1]

    @property
    def phi(self) -> np.ndarray | None:
        return self.traj.y[:, 2] if self.elliptical else None

    def phase(self, t) -> np.ndarray:
        """Evader velocity angle Theta at time(s) ``t``."""
        if self.elliptical:
            return self.traj.sample_at(t)[..., 2]
        return np.asarray(t) / self.shape.a + math.pi / 2

    def time_at_phi(self, phi: float) -> float:
        """Time at which the evader phase reaches ``phi`` (phi is monotone in t)."""
        from scipy.optimize import brentq

        if not self.elliptical:
            return (phi - math.pi / 2) * self.shape.a
        ph = self.phi
        if not ph[0] <= phi <= ph[-1]:
            raise ValueError(f"phi={phi} outside integrated range [{ph[0]}, {ph[-1]}]")
        i = int(np.searchsorted(ph, phi))
        if ph[i] == phi:
            return float(self.t[i])
        return brentq(lambda t: self.traj.sample_at(t)[2] - phi, self.t[i - 1], self.t[i],
                      xtol=1e-14, rtol=4 * np.finfo(float).eps)

    def pursuer(self) -> np.ndarray:
        """Pursuer positions at every stored sample."""
        out = []
        for row, t in zip(self.traj.y, self.t):
            if self.elliptical:
                ev = ellipse_const_speed(row[2], self.shape).pos
                Theta = row[2]
            else:
                ev = circle_unit_speed(t, self.shape.a).pos
                Theta = t / self.shape.a + math.pi / 2
            out.append(reconstruct_pursuer(ev, Theta, row))
        return np.array(out)


def _capture_pieces(settings, capture_eps, n):
    event = settings.event(lambda t, y: y[0] - capture_eps)

    def step_limit(t, y):
        return 0.5 * y[0] / (1.0 + n)

    return event, step_limit


def integrate_circle_dds(n, a, rho0, zeta0, t0=0.0, t1=10 * math.pi,
                         settings: IntegratorSettings | None = None,
                         capture_eps: float = 1e-6) -> DynRun:
    settings = settings or IntegratorSettings()
    if not rho0 > 0:
        raise ValueError("rho0 must be positive")
    sys = OdeSystem(2, lambda t, y: np.array(dds_rhs_circle(y, n, a)))
    event, limit = _capture_pieces(settings, capture_eps, n)
    traj = settings.run(sys, [rho0, zeta0], t0, t1, event=event, step_limit=limit)
    cap = traj.event.t if traj.event is not None else None
    return DynRun(traj, n, EllipseShape(a, a), False, cap)


def integrate_ellipse_dds(n, shape: EllipseShape, rho0, zeta0, phi0=math.pi / 2, t0=0.0,
                          t1=10 * math.pi, settings: IntegratorSettings | None = None,
                          capture_eps: float = 1e-6) -> DynRun:
    """Integrate (rho, zeta, phi) in time with the evader moving at unit speed."""
    settings = settings or IntegratorSettings()
    if not rho0 > 0:
        raise ValueError("rho0 must be positive")
    sys = OdeSystem(3, lambda t, y: np.array(dds_rhs_ellipse(y, n, shape)))
    event, limit = _capture_pieces(settings, capture_eps, n)
    traj = settings.run(sys, [rho0, zeta0, phi0], t0, t1, event=event, step_limit=limit)
    cap = traj.event.t if traj.event is not None else None
    return DynRun(traj, n, shape, True, cap)


def integrate_zeta_theta(n, shape: EllipseShape, rho0, zeta0, phi0=math.pi / 2,
                         span=2 * math.pi, settings: IntegratorSettings | None = None,
                         singular_floor: float = SINGULAR_FLOOR) -> Trajectory:
    """Integrate zeta(Theta) for the ellipse as the first-order pair (zeta, zeta').

    The initial slope comes from rho*zeta' = -f*sin(zeta) + rho at Theta0, which
    is where ``rho0`` enters; the second-order equation itself no longer
    involves rho.
    """
    settings = settings or IntegratorSettings()
    if not rho0 > 0:
        raise ValueError("rho0 must be positive")
    f0, _ = f_and_logderiv_ellipse(phi0, shape)
    zeta_p0 = 1.0 - f0 * math.sin(zeta0) / rho0

    def rhs(Theta, y):
        f, logd = f_and_logderiv_ellipse(Theta, shape)
        return np.array([y[1], zeta_second_order_rhs(y[0], y[1], Theta, f, f * logd, n,
                                                     singular_floor)])

    return settings.run(OdeSystem(2, rhs), [zeta0, zeta_p0], phi0, phi0 + span)
