"""Explicit ODE integration with dense output and down-crossing events.

Two drivers share one event contract:

* :func:`integrate_fixed` takes classical RK4 steps of size ``h`` (the last
  step is shortened to land on ``t1``);
* :func:`integrate_adaptive` uses the Dormand-Prince 5(4) pair with the usual
  error-per-step controller.

Both record ``(t, y, f(t, y))`` at every accepted step, so a :class:`Trajectory`
can be evaluated anywhere in its span by cubic Hermite interpolation.

An :class:`EventSpec` guard is watched at step ends. When it goes from
positive to ``<= 0`` the crossing is bracketed inside the step and refined by
bisection, re-taking a single shortened step from the step start each time,
so the reported state is a genuine integrator state rather than an
interpolant. The trajectory is truncated at the event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .errors import IntegrationError

__all__ = [
    "OdeSystem",
    "EventSpec",
    "EventHit",
    "Trajectory",
    "IntegratorSettings",
    "rk4_step",
    "dopri_step",
    "integrate_fixed",
    "integrate_adaptive",
    "sample_at",
]

DEFAULT_H = 1e-4
DEFAULT_REL_TOL = 1e-9
DEFAULT_ABS_TOL = 1e-12
DEFAULT_REFINE_TOL = 1e-10

Rhs = Callable[[float, np.ndarray], np.ndarray]
StepLimit = Callable[[float, np.ndarray], float]


@dataclass(frozen=True)
class OdeSystem:
    dim: int
    rhs: Rhs

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        f = np.asarray(self.rhs(t, y), dtype=float)
        if f.shape != (self.dim,) or not np.all(np.isfinite(f)):
            raise IntegrationError(f"non-finite or malformed derivative at t={t!r}, state={y!r}", t, y)
        return f


@dataclass(frozen=True)
class EventSpec:
    """Stop when ``guard(t, y)`` crosses zero downward."""

    guard: Callable[[float, np.ndarray], float]
    refine_tol: float = DEFAULT_REFINE_TOL
    direction: str = "down"

    def __post_init__(self):
        if not self.refine_tol > 0:
            raise ValueError("refine_tol must be positive")
        if self.direction != "down":
            raise ValueError("only down-crossing events are supported")


class EventHit(NamedTuple):
    t: float
    state: np.ndarray
    guard: float


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    event: EventHit | None = None
    stats: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dim(self) -> int:
        return self.y.shape[1]

    @property
    def span(self) -> tuple[float, float]:
        return float(self.t[0]), float(self.t[-1])

    @property
    def final(self) -> np.ndarray:
        return self.y[-1]

    def samples(self):
        """Iterate over ``(t, state, derivative)`` triples."""
        return zip(self.t, self.y, self.dy)

    def sample_at(self, t):
        return sample_at(self, t)


def _hermite(t0, t1, y0, y1, f0, f1, t):
    h = t1 - t0
    s = (t - t0) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + s
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def sample_at(traj: Trajectory, t):
    """Cubic Hermite interpolation of ``traj`` at scalar or array ``t``.

    Returns a state vector for scalar ``t`` and an ``(m, dim)`` array otherwise.
    Node times return the stored state exactly.
    """
    ts = traj.t
    tq = np.asarray(t, dtype=float)
    lo, hi = ts[0], ts[-1]
    # tiny slack: callers pass span endpoints recomputed in floating point
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    if np.any(tq < lo - slack) or np.any(tq > hi + slack) or np.any(~np.isfinite(tq)):
        raise ValueError(f"t outside trajectory span [{lo}, {hi}]")
    tq1 = np.atleast_1d(np.clip(tq, lo, hi))
    if len(ts) == 1:
        out = np.repeat(traj.y[:1], len(tq1), axis=0)
    else:
        i = np.clip(np.searchsorted(ts, tq1, side="right") - 1, 0, len(ts) - 2)
        out = _hermite(
            ts[i][:, None], ts[i + 1][:, None],
            traj.y[i], traj.y[i + 1], traj.dy[i], traj.dy[i + 1],
            tq1[:, None],
        )
        exact = ts[i] == tq1
        out[exact] = traj.y[i[exact]]
        exact_hi = ts[i + 1] == tq1
        out[exact_hi] = traj.y[i[exact_hi] + 1]
    return out[0] if tq.ndim == 0 else out


# --- single steps -----------------------------------------------------------

def rk4_step(sys, t: float, state, h: float, f0=None) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of size ``h``."""
    if h == 0:
        raise ValueError("step size must be non-zero")
    if not isinstance(sys, OdeSystem):
        sys = OdeSystem(len(np.atleast_1d(state)), sys)
    y = np.asarray(state, dtype=float)
    k1 = sys(t, y) if f0 is None else f0
    k2 = sys(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = sys(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = sys(t + h, y + h * k3)
    y1 = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(y1)):
        raise IntegrationError(f"non-finite state after step from t={t!r}, state={y!r}", t, y)
    return y1


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


def dopri_step(sys: OdeSystem, t: float, y: np.ndarray, h: float, f0: np.ndarray):
    """Dormand-Prince step. Returns ``(y_new, f_new, err_vector)``; FSAL."""
    k = [f0]
    for i in range(1, 6):
        dy = sum(a * kj for a, kj in zip(_A[i], k))
        k.append(sys(t + _C[i] * h, y + h * dy))
    y1 = y + h * sum(b * kj for b, kj in zip(_B, k))
    if not np.all(np.isfinite(y1)):
        raise IntegrationError(f"non-finite state after step from t={t!r}, state={y!r}", t, y)
    f1 = sys(t + h, y1)
    k.append(f1)
    err = h * sum(e * kj for e, kj in zip(_E, k))
    return y1, f1, err


# --- drivers ----------------------------------------------------------------

def _refine_event(substep, t, y, g0, h, event: EventSpec):
    """Bisect tau in (0, h] on the guard of ``substep(tau)``; g0 > 0 >= g(h)."""
    lo, hi = 0.0, h
    y_hi = substep(hi)
    g_hi = event.guard(t + hi, y_hi)
    best = (hi, y_hi, g_hi)
    # bracket well inside refine_tol so the event time is not off by a guard-slope factor
    width = 1e-3 * event.refine_tol
    for _ in range(200):
        if hi - lo <= width and abs(best[2]) <= event.refine_tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        y_mid = substep(mid)
        g_mid = event.guard(t + mid, y_mid)
        if g_mid > 0:
            lo = mid
        else:
            hi = mid
            best = (mid, y_mid, g_mid)
        if abs(g_mid) < abs(best[2]):
            best = (mid, y_mid, g_mid)
    tau, y_ev, g_ev = best
    return t + tau, y_ev, g_ev


def _check_span(t0, t1):
    if not (math.isfinite(t0) and math.isfinite(t1)):
        raise ValueError("integration bounds must be finite")
    if t1 < t0:
        raise ValueError(f"need t1 >= t0, got t0={t0}, t1={t1}")


def _as_system(sys, y0) -> OdeSystem:
    if isinstance(sys, OdeSystem):
        return sys
    return OdeSystem(len(y0), sys)


class _Stops:
    """Sorted interior times that step ends must land on."""

    def __init__(self, stops, t0, t1):
        arr = np.unique(np.asarray([] if stops is None else stops, dtype=float))
        self.times = arr[(arr > t0) & (arr < t1)]
        self.i = 0

    def clip(self, t, step, t1):
        """Shorten ``step`` to the next stop; returns ``(step, exact end time)``."""
        while self.i < len(self.times) and self.times[self.i] <= t:
            self.i += 1
        if self.i < len(self.times) and t + step >= self.times[self.i]:
            nxt = self.times[self.i]
            return nxt - t, nxt
        end = t1 if step == t1 - t else t + step
        return step, end


def _finish(ts, ys, fs, event_hit, **stats):
    return Trajectory(np.array(ts), np.array(ys), np.array(fs), event_hit, stats)


def integrate_fixed(
    sys,
    state0,
    t0: float,
    t1: float,
    h: float = DEFAULT_H,
    event: EventSpec | None = None,
    step_limit: StepLimit | None = None,
    stops=None,
) -> Trajectory:
    """Fixed-step RK4 from ``t0`` to ``t1``.

    ``step_limit(t, y)`` optionally caps individual steps (used to approach
    singular sets without stepping over them). ``stops`` are times the step
    sequence must land on exactly, so they appear as nodes of the result.
    """
    _check_span(t0, t1)
    if not h > 0:
        raise ValueError("h must be positive")
    stops = _Stops(stops, t0, t1)
    y = np.array(state0, dtype=float)
    sys = _as_system(sys, y)
    f = sys(t0, y)
    t = float(t0)
    ts, ys, fs = [t], [y], [f]
    g = event.guard(t, y) if event else None
    n = 0
    while t < t1:
        step = min(h, t1 - t)
        if step_limit is not None:
            step = min(step, step_limit(t, y))
        if t + step >= t1 or t1 - (t + step) < 1e-12 * h:
            step = t1 - t
        step, t_new = stops.clip(t, step, t1)
        if not step > 0 or t + step == t:
            raise IntegrationError(f"step size underflow at t={t!r}, state={y!r}", t, y)
        y_new = rk4_step(sys, t, y, step, f)
        if event is not None:
            g_new = event.guard(t_new, y_new)
            if g > 0 and g_new <= 0:
                t_ev, y_ev, g_ev = _refine_event(
                    lambda tau: rk4_step(sys, t, y, tau, f), t, y, g, step, event
                )
                ts.append(t_ev)
                ys.append(y_ev)
                fs.append(sys(t_ev, y_ev))
                return _finish(ts, ys, fs, EventHit(t_ev, y_ev, g_ev), steps=n + 1, method="rk4")
            g = g_new
        t, y = t_new, y_new
        f = sys(t, y)
        ts.append(t)
        ys.append(y)
        fs.append(f)
        n += 1
    return _finish(ts, ys, fs, None, steps=n, method="rk4")


def _initial_step(sys, t0, y0, f0, t1, rtol, atol):
    # Hairer, Norsett & Wanner, Solving ODEs I, II.4
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, t1 - t0)
    y1 = y0 + h0 * f0
    f1 = sys(t0 + h0, y1)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, t1 - t0)


def integrate_adaptive(
    sys,
    state0,
    t0: float,
    t1: float,
    rel_tol: float = DEFAULT_REL_TOL,
    abs_tol: float = DEFAULT_ABS_TOL,
    event: EventSpec | None = None,
    step_limit: StepLimit | None = None,
    max_step: float = math.inf,
    stops=None,
) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) integration from ``t0`` to ``t1``.

    Same ``event``, ``step_limit`` and ``stops`` contract as
    :func:`integrate_fixed`.
    """
    _check_span(t0, t1)
    if not (rel_tol > 0 and abs_tol > 0):
        raise ValueError("tolerances must be positive")
    stops = _Stops(stops, t0, t1)
    y = np.array(state0, dtype=float)
    sys = _as_system(sys, y)
    t = float(t0)
    f = sys(t, y)
    ts, ys, fs = [t], [y], [f]
    if t1 == t0:
        return _finish(ts, ys, fs, None, steps=0, rejected=0, method="dopri5")
    span = t1 - t0
    h_min = 1e-14 * span
    h = min(_initial_step(sys, t, y, f, t1, rel_tol, abs_tol), max_step)
    g = event.guard(t, y) if event else None
    accepted = rejected = 0
    while t < t1:
        if step_limit is not None:
            h = min(h, step_limit(t, y))
        if h < h_min:
            raise IntegrationError(f"step size underflow (h={h:.3e}) at t={t!r}, state={y!r}", t, y)
        if t + h >= t1 or t1 - (t + h) < h_min:
            h = t1 - t
        h, t_new = stops.clip(t, h, t1)
        y_new, f_new, err = dopri_step(sys, t, y, h, f)
        scale = abs_tol + rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err_norm = float(np.sqrt(np.mean((err / scale) ** 2)))
        if err_norm > 1.0:
            rejected += 1
            h *= max(0.2, 0.9 * err_norm ** -0.2)
            continue
        if event is not None:
            g_new = event.guard(t_new, y_new)
            if g > 0 and g_new <= 0:
                t_ev, y_ev, g_ev = _refine_event(
                    lambda tau: dopri_step(sys, t, y, tau, f)[0], t, y, g, t_new - t, event
                )
                ts.append(t_ev)
                ys.append(y_ev)
                fs.append(sys(t_ev, y_ev))
                return _finish(ts, ys, fs, EventHit(t_ev, y_ev, g_ev),
                               steps=accepted + 1, rejected=rejected, method="dopri5")
            g = g_new
        t, y, f = t_new, y_new, f_new
        ts.append(t)
        ys.append(y)
        fs.append(f)
        accepted += 1
        factor = 5.0 if err_norm == 0 else min(5.0, max(0.2, 0.9 * err_norm ** -0.2))
        h = min(h * factor, max_step)
    return _finish(ts, ys, fs, None, steps=accepted, rejected=rejected, method="dopri5")


@dataclass(frozen=True)
class IntegratorSettings:
    """Method choice plus its knobs, passed through the simulation layers."""

    method: str = "adaptive"
    h: float = DEFAULT_H
    rel_tol: float = DEFAULT_REL_TOL
    abs_tol: float = DEFAULT_ABS_TOL
    refine_tol: float = DEFAULT_REFINE_TOL
    max_step: float = math.inf

    def __post_init__(self):
        if self.method not in ("adaptive", "rk4"):
            raise ValueError(f"unknown method {self.method!r}")

    @classmethod
    def fixed(cls, h: float = DEFAULT_H, **kw) -> IntegratorSettings:
        return cls(method="rk4", h=h, **kw)

    def event(self, guard) -> EventSpec:
        return EventSpec(guard, self.refine_tol)

    def run(self, sys, state0, t0, t1, event=None, step_limit=None, stops=None) -> Trajectory:
        if self.method == "rk4":
            return integrate_fixed(sys, state0, t0, t1, self.h, event, step_limit, stops)
        return integrate_adaptive(sys, state0, t0, t1, self.rel_tol, self.abs_tol,
                                  event, step_limit, self.max_step, stops)
