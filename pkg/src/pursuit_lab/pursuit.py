"""Pure-pursuit right-hand side and Cartesian pursuit simulations."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .curves import EllipseShape, EvaderState, Vec2, get_curve
from .errors import CaptureError
from .integrate import IntegratorSettings, OdeSystem, Trajectory

__all__ = [
    "PursuitConfig",
    "PursuitSample",
    "CaptureEvent",
    "PursuitRun",
    "pursuit_rhs",
    "lambda_of",
    "simulate_pursuit",
]

DEFAULT_CAPTURE_EPS = 1e-6


@dataclass(frozen=True)
class PursuitConfig:
    n: float
    p0: Vec2
    param0: float
    param1: float
    capture_eps: float = DEFAULT_CAPTURE_EPS

    def __post_init__(self):
        if not self.n > 0:
            raise ValueError(f"speed ratio n must be positive, got {self.n}")
        if not self.param1 > self.param0:
            raise ValueError(f"need param1 > param0, got [{self.param0}, {self.param1}]")
        if not self.capture_eps > 0:
            raise ValueError("capture_eps must be positive")
        object.__setattr__(self, "p0", Vec2(*map(float, self.p0)))


class PursuitSample(NamedTuple):
    param: float
    evader: Vec2
    pursuer: Vec2
    lam: float
    rho: float


class CaptureEvent(NamedTuple):
    param: float
    position: Vec2


def pursuit_rhs(ev: EvaderState, p, n: float) -> Vec2:
    """Pursuer velocity n*|E'| * (E - P)/|E - P| for the evader state ``ev``.

    Derivatives are taken with respect to the evader's own parameter, so the
    same function serves every parameterization.
    """
    dx = ev.pos[0] - p[0]
    dy = ev.pos[1] - p[1]
    rho = math.hypot(dx, dy)
    if rho == 0.0:
        raise CaptureError(f"pursuer and evader coincide at param={ev.param!r}")
    k = n * math.hypot(ev.vel[0], ev.vel[1]) / rho
    return Vec2(k * dx, k * dy)


def lambda_of(ev: EvaderState, p, n: float) -> float:
    """Scalar lam >= 0 with E - P = lam * P'; equals rho / (n*|E'|)."""
    speed = math.hypot(ev.vel[0], ev.vel[1])
    if speed == 0.0:
        raise ValueError(f"evader speed is zero at param={ev.param!r}")
    return math.hypot(ev.pos[0] - p[0], ev.pos[1] - p[1]) / (n * speed)


@dataclass
class PursuitRun:
    """A finished simulation: the pursuer trajectory plus the evader it chased."""

    traj: Trajectory
    curve: object
    shape: EllipseShape
    config: PursuitConfig
    capture: CaptureEvent | None

    @property
    def params(self) -> np.ndarray:
        return self.traj.t

    @property
    def pursuer(self) -> np.ndarray:
        return self.traj.y

    @property
    def pursuer_vel(self) -> np.ndarray:
        return self.traj.dy

    def evader_states(self) -> list[EvaderState]:
        return [self.curve(s, self.shape) for s in self.traj.t]

    @property
    def evader(self) -> np.ndarray:
        return np.array([ev.pos for ev in self.evader_states()])

    @property
    def evader_vel(self) -> np.ndarray:
        return np.array([ev.vel for ev in self.evader_states()])

    @property
    def rho(self) -> np.ndarray:
        return np.hypot(*(self.evader - self.pursuer).T)

    @property
    def lam(self) -> np.ndarray:
        return self.rho / (self.config.n * np.hypot(*self.evader_vel.T))

    def samples(self) -> list[PursuitSample]:
        n = self.config.n
        out = []
        for s, p in zip(self.traj.t, self.traj.y):
            ev = self.curve(s, self.shape)
            pv = Vec2(float(p[0]), float(p[1]))
            out.append(PursuitSample(float(s), ev.pos, pv, lambda_of(ev, pv, n),
                                     math.hypot(ev.pos[0] - pv[0], ev.pos[1] - pv[1])))
        return out

    def pursuer_at(self, param) -> np.ndarray:
        return self.traj.sample_at(param)


def simulate_pursuit(
    curve,
    shape: EllipseShape,
    config: PursuitConfig,
    settings: IntegratorSettings | None = None,
    stops=None,
) -> PursuitRun:
    """Integrate the pursuer against ``curve`` over ``[param0, param1]``.

    ``curve`` is a name from :data:`pursuit_lab.curves.CURVES` or any callable
    ``(param, shape) -> EvaderState``. Integration runs in the curve's own
    parameter; for the constant-speed ellipse that is phi and the evader's
    d(pos)/d(phi) already carries the 1/phi_dot factor. The run stops early
    when the separation drops through ``capture_eps``. ``stops`` are
    parameter values that must appear as trajectory nodes.
    """
    curve = get_curve(curve)
    settings = settings or IntegratorSettings()
    n, eps = config.n, config.capture_eps
    ev0 = curve(config.param0, shape)
    if math.hypot(ev0.pos[0] - config.p0[0], ev0.pos[1] - config.p0[1]) <= eps:
        raise CaptureError("pursuer starts on the evader (immediate capture)")

    def rhs(s, y):
        return np.array(pursuit_rhs(curve(s, shape), y, n))

    def separation(s, y):
        ev = curve(s, shape)
        return math.hypot(ev.pos[0] - y[0], ev.pos[1] - y[1])

    def step_limit(s, y):
        # closing speed is at most (1 + n)|E'|; keep each step inside half the gap
        ev = curve(s, shape)
        speed = math.hypot(ev.vel[0], ev.vel[1])
        gap = math.hypot(ev.pos[0] - y[0], ev.pos[1] - y[1])
        return math.inf if speed == 0 else 0.5 * gap / ((1.0 + n) * speed)

    event = settings.event(lambda s, y: separation(s, y) - eps)
    traj = settings.run(OdeSystem(2, rhs), config.p0, config.param0, config.param1,
                        event=event, step_limit=step_limit, stops=stops)
    capture = None
    if traj.event is not None:
        capture = CaptureEvent(float(traj.event.t), Vec2(*map(float, traj.event.state)))
    return PursuitRun(traj, curve, shape, config, capture)
