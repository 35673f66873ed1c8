"""Experiment-level procedures built on the simulators.

* :func:`invariance_check` runs the same chase under the three ellipse
  parameterizations and compares pursuer positions where the evaders coincide.
* :func:`poincare_crossings` and :func:`limit_cycle_detect` look for a closed
  orbit of the elliptical reduced system.
* :func:`radial_convergence` measures how close the pursuer's tail is to a
  target radius (constant, or a function of polar angle).
* :func:`cross_model_check` and :func:`zeta_ode_check` compare the Cartesian
  simulation, the (rho, zeta, phi) system and the second-order zeta equation.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .curves import (
    START_PARAM,
    EllipseShape,
    Vec2,
    ellipse_argument,
    ellipse_const_speed,
    get_curve,
    param_from_argument,
)
from .dynsys import (
    DynRun,
    SINGULAR_FLOOR,
    initial_state_from_positions,
    integrate_ellipse_dds,
    integrate_zeta_theta,
    reconstruct_pursuer,
)
from .errors import PursuitLabError, SingularityError
from .integrate import IntegratorSettings, Trajectory
from .pursuit import PursuitConfig, PursuitRun, simulate_pursuit

__all__ = [
    "PARAMETERIZATIONS",
    "Anchor",
    "InvarianceReport",
    "SectionCrossing",
    "LimitCycleResult",
    "invariance_check",
    "match_parameter",
    "reparameterization_check",
    "poincare_crossings",
    "limit_cycle_detect",
    "radial_convergence",
    "scaled_ellipse_radius",
    "cross_model_check",
    "zeta_ode_check",
    "pursuit_invariants",
    "wrap_angle",
    "max_workers",
]

PARAMETERIZATIONS = ("standard", "angvel", "arclen")


def max_workers(default: int = 3) -> int:
    """Thread cap from PURSUIT_LAB_THREADS (at least 1)."""
    raw = os.environ.get("PURSUIT_LAB_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"PURSUIT_LAB_THREADS must be an integer, got {raw!r}") from None


def wrap_angle(x):
    """Map angles into (-pi, pi]."""
    y = np.mod(np.asarray(x, dtype=float) + math.pi, 2 * math.pi) - math.pi
    y = np.where(y == -math.pi, math.pi, y)
    return float(y) if np.ndim(y) == 0 else y


# --- reparameterization invariance ------------------------------------------

class Anchor(NamedTuple):
    k: int
    params: tuple[float, ...]
    evader: Vec2
    pursuers: tuple[Vec2, ...]
    max_dev: float


@dataclass
class InvarianceReport:
    anchors: list[Anchor]
    max_pursuer_deviation: float
    tolerance: float
    pass_: bool
    captured: dict[str, float] = field(default_factory=dict)
    runs: dict[str, PursuitRun] = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return self.pass_


def match_parameter(kind: str, evader_pos, shape: EllipseShape, near: float | None = None) -> float:
    """Parameter at which curve ``kind`` passes through ``evader_pos``."""
    return param_from_argument(kind, ellipse_argument(evader_pos, shape), shape, near)


def invariance_check(
    shape: EllipseShape,
    n: float,
    p0=(0.0, 0.0),
    anchor_step: float = math.pi / 2,
    tol: float = 1e-3,
    settings: IntegratorSettings | None = None,
    orbits: float = 1.0,
    anchor_tol: float = 1e-9,
) -> InvarianceReport:
    """Chase the ellipse under the three parameterizations and compare pursuers.

    Anchors sit at t = phi - pi/2 = k*anchor_step. When ``anchor_step`` is a
    multiple of pi/2 the anchors are axis points, where the three
    parameterizations agree by construction; otherwise the angular-velocity
    and constant-speed parameters are found by matching the standard evader
    position.
    """
    settings = settings or IntegratorSettings()
    span = 2 * math.pi * orbits
    cfgs = {kind: PursuitConfig(n, p0, START_PARAM[kind], START_PARAM[kind] + span)
            for kind in PARAMETERIZATIONS}
    with ThreadPoolExecutor(max_workers=min(3, max_workers())) as pool:
        futures = {kind: pool.submit(simulate_pursuit, kind, shape, cfgs[kind], settings)
                   for kind in PARAMETERIZATIONS}
        runs = {kind: fut.result() for kind, fut in futures.items()}

    captured = {k: r.capture.param for k, r in runs.items() if r.capture is not None}
    on_axis = math.isclose(math.remainder(anchor_step, math.pi / 2), 0.0, abs_tol=1e-15)
    anchors: list[Anchor] = []
    k = 0
    while k * anchor_step <= span * (1 + 1e-12):
        t = k * anchor_step
        if on_axis:
            params = (t, t, t + math.pi / 2)
        else:
            ev = get_curve("standard")(t, shape).pos
            params = (t, match_parameter("angvel", ev, shape, near=t),
                      match_parameter("arclen", ev, shape, near=t + math.pi / 2))
        evs = [get_curve(kind)(p, shape).pos for kind, p in zip(PARAMETERIZATIONS, params)]
        ev_spread = max(math.dist(u, v) for u in evs for v in evs)
        if ev_spread > anchor_tol:
            raise PursuitLabError(f"evader positions disagree by {ev_spread:.3e} at anchor k={k}")
        if any(p > runs[kind].traj.t[-1] for kind, p in zip(PARAMETERIZATIONS, params)):
            break  # a run ended early by capture
        ps = [Vec2(*map(float, runs[kind].pursuer_at(p))) for kind, p in zip(PARAMETERIZATIONS, params)]
        dev = max(math.dist(u, v) for u in ps for v in ps)
        anchors.append(Anchor(k, params, Vec2(*evs[0]), tuple(ps), dev))
        k += 1
    worst = max((a.max_dev for a in anchors), default=math.nan)
    return InvarianceReport(anchors, worst, tol, bool(worst <= tol), captured, runs)


def reparameterization_check(
    shape: EllipseShape,
    n: float,
    warp: Callable[[float], float],
    dwarp: Callable[[float], float],
    curve="standard",
    p0=(0.0, 0.0),
    span: float = 2 * math.pi,
    samples: int = 64,
    settings: IntegratorSettings | None = None,
) -> float:
    """Max pursuer gap between a curve and its reparameterization ``t = warp(s)``.

    ``warp`` must be strictly increasing with derivative ``dwarp``. Both runs
    are forced to land on the matched parameters ``s_j`` and ``warp(s_j)``,
    so the comparison involves no interpolation.
    """
    from .curves import EvaderState

    base = get_curve(curve)
    settings = settings or IntegratorSettings()
    s0 = START_PARAM.get(curve, 0.0) if isinstance(curve, str) else 0.0

    def warped(s, shp):
        ev = base(warp(s), shp)
        k = dwarp(s)
        return EvaderState(s, ev.pos, Vec2(k * ev.vel.x, k * ev.vel.y), ev.time_vel)

    t0, t1 = s0, s0 + span
    s_start, s_end = _invert(warp, t0, t0), _invert(warp, t1, t1)
    sg = np.linspace(s_start, s_end, samples + 2)[1:-1]
    tg = np.array([warp(s) for s in sg])
    cfg_w = PursuitConfig(n, p0, s_start, s_end)
    cfg_b = PursuitConfig(n, p0, t0, t1)
    run_w = simulate_pursuit(warped, shape, cfg_w, settings, stops=sg)
    run_b = simulate_pursuit(base, shape, cfg_b, settings, stops=tg)
    pw = run_w.traj.y[np.isin(run_w.traj.t, sg)]
    pb = run_b.traj.y[np.isin(run_b.traj.t, tg)]
    if len(pw) != len(sg) or len(pb) != len(tg):
        raise PursuitLabError("matched parameters missing from a run (capture?)")
    return float(np.max(np.hypot(*(pw - pb).T)))


def _invert(fn, target, guess, width=1.0):
    """Solve fn(s) = target for increasing ``fn`` by bracket expansion."""
    lo, hi = guess - width, guess + width
    while fn(lo) > target:
        lo -= 2 * (hi - lo)
    while fn(hi) < target:
        hi += 2 * (hi - lo)
    return brentq(lambda s: fn(s) - target, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


# --- Poincare sections ------------------------------------------------------

class SectionCrossing(NamedTuple):
    k: int
    rho: float
    zeta_wrapped: float
    t: float = math.nan
    zeta: float = math.nan


@dataclass
class LimitCycleResult:
    converged: bool
    last_gap: float
    cycle_point: tuple[float, float]
    gaps: list[float]
    gaps_nonincreasing: bool


def _phase_column(traj) -> tuple[Trajectory, int]:
    if isinstance(traj, DynRun):
        if not traj.elliptical:
            raise ValueError("Poincare sections need the elliptical (rho, zeta, phi) system")
        return traj.traj, 2
    return traj, 2


def poincare_crossings(traj, section_phi: float = math.pi / 2, phi_tol: float = 1e-10) -> list[SectionCrossing]:
    """Upward passes of phi through ``section_phi`` (mod 2*pi).

    A start exactly on the section is not counted. Each crossing time is
    refined on the dense output until phi is within ``phi_tol`` of the section.
    """
    tr, col = _phase_column(traj)
    phi = tr.y[:, col]
    # phi_tol slack lets a run that ends on the section count its last crossing
    turns = np.floor((phi - section_phi + phi_tol) / (2 * math.pi)).astype(int)
    out: list[SectionCrossing] = []
    for i in np.nonzero(np.diff(turns) > 0)[0]:
        for m in range(turns[i] + 1, turns[i + 1] + 1):
            target = section_phi + 2 * math.pi * m
            if abs(phi[i + 1] - target) <= phi_tol:
                tc = float(tr.t[i + 1])
            else:
                tc = brentq(lambda t: tr.sample_at(t)[col] - target, tr.t[i], tr.t[i + 1],
                            xtol=1e-15, rtol=4 * np.finfo(float).eps)
            y = tr.sample_at(tc)
            if abs(y[col] - target) > phi_tol:
                raise PursuitLabError(f"section refinement missed phi={target} by {abs(y[col] - target):.2e}")
            out.append(SectionCrossing(len(out) + 1, float(y[0]), wrap_angle(y[1]), tc, float(y[1])))
    if len(out) < 2:
        raise PursuitLabError(f"only {len(out)} section crossing(s); integrate over more orbits")
    return out


def limit_cycle_detect(crossings: Sequence, tol: float = 1e-3) -> LimitCycleResult:
    """Converged when the last two section points are within ``tol``.

    Distances are Euclidean in (rho, zeta) with the zeta difference wrapped.
    """
    if len(crossings) < 3:
        raise ValueError("need at least 3 crossings")
    gaps = []
    for prev, cur in zip(crossings, crossings[1:]):
        dz = wrap_angle(cur[2] - prev[2])
        gaps.append(math.hypot(cur[1] - prev[1], dz))
    half = len(crossings) // 2
    tail = gaps[half:] if half < len(gaps) else gaps[-1:]
    mono = all(b <= a for a, b in zip(tail, tail[1:]))
    last = crossings[-1]
    return LimitCycleResult(gaps[-1] <= tol, gaps[-1], (float(last[1]), float(last[2])), gaps, mono)


# --- radial convergence -----------------------------------------------------

def scaled_ellipse_radius(shape: EllipseShape, factor: float) -> Callable[[float], float]:
    """Polar radius of the ellipse scaled by ``factor`` about its centre."""
    return lambda angle: factor * shape.radius_at(angle)


def radial_convergence(traj, center=(0.0, 0.0), expected_r=0.5, tail_fraction: float = 0.2) -> float:
    """Max | |P - center| - r | over the last ``tail_fraction`` of pursuer samples.

    ``traj`` is a :class:`PursuitRun`, a :class:`Trajectory` of pursuer
    positions, or an ``(N, 2)`` array. ``expected_r`` is a number or a
    function of the polar angle about ``center``.
    """
    if not 0 < tail_fraction < 1:
        raise ValueError("tail_fraction must be in (0, 1)")
    if isinstance(traj, PursuitRun):
        pts = traj.pursuer
    elif isinstance(traj, Trajectory):
        pts = traj.y
    else:
        pts = np.asarray(traj, dtype=float)
    start = int(math.floor(len(pts) * (1 - tail_fraction)))
    tail = pts[start:] - np.asarray(center, dtype=float)
    if len(tail) == 0:
        raise ValueError("empty tail")
    r = np.hypot(tail[:, 0], tail[:, 1])
    if callable(expected_r):
        target = np.array([expected_r(ang) for ang in np.arctan2(tail[:, 1], tail[:, 0])])
    else:
        target = float(expected_r)
    return float(np.max(np.abs(r - target)))


# --- pursuit invariants -----------------------------------------------------

def pursuit_invariants(run: PursuitRun) -> dict[str, float]:
    """Worst-case residuals of the pursuit relations over every stored sample.

    speed_ratio_err: max | |P'|/|E'| - n |
    bearing: max |P' x (E - P)| / (rho |P'|)
    lambda_err: max |P + lam P' - E|
    min_lambda: smallest lam (must be >= 0)
    """
    E = run.evader
    Ev = run.evader_vel
    P = run.pursuer
    Pv = run.pursuer_vel
    d = E - P
    rho = np.hypot(d[:, 0], d[:, 1])
    sp = np.hypot(Pv[:, 0], Pv[:, 1])
    se = np.hypot(Ev[:, 0], Ev[:, 1])
    cross = np.abs(Pv[:, 0] * d[:, 1] - Pv[:, 1] * d[:, 0])
    lam = rho / (run.config.n * se)
    return {
        "speed_ratio_err": float(np.max(np.abs(sp / se - run.config.n))),
        "bearing": float(np.max(cross / (rho * sp))),
        "lambda_err": float(np.max(np.hypot(*(P + lam[:, None] * Pv - E).T))),
        "min_lambda": float(np.min(lam)),
    }


# --- cross-model comparisons ------------------------------------------------

@dataclass
class CrossModelResult:
    max_dev: float
    phis: np.ndarray
    cartesian: np.ndarray
    reconstructed: np.ndarray
    pursuit: PursuitRun = field(repr=False)
    dyn: DynRun = field(repr=False)


def cross_model_check(shape: EllipseShape, n: float, p0=(0.0, 0.0), orbits: float = 1.0,
                      settings: IntegratorSettings | None = None) -> CrossModelResult:
    """Cartesian chase (integrated in phi) versus the reduced system mapped back to the plane.

    Both start from the evader at phi = pi/2. The reduced system runs in time
    with a unit-speed evader; each Cartesian node phi_i is matched to the time
    where the integrated phase reaches phi_i.
    """
    settings = settings or IntegratorSettings()
    phi0 = math.pi / 2
    phi1 = phi0 + 2 * math.pi * orbits
    run = simulate_pursuit("arclen", shape, PursuitConfig(n, p0, phi0, phi1), settings)
    ev0 = ellipse_const_speed(phi0, shape)
    init = initial_state_from_positions(ev0.pos, phi0, p0)
    # time for the unit-speed evader to cover the arc is its length; pad by 5%
    arc = _arc_length(shape, phi0, phi1)
    dyn = integrate_ellipse_dds(n, shape, init.rho, init.zeta, phi0, 0.0, 1.05 * arc, settings)
    phis = run.params[run.params <= dyn.phi[-1]]
    rec = []
    for ph in phis:
        t = dyn.time_at_phi(ph)
        rho, zeta, phi = dyn.traj.sample_at(t)
        rec.append(reconstruct_pursuer(ellipse_const_speed(ph, shape).pos, ph, (rho, zeta)))
    rec = np.array(rec)
    cart = run.pursuer[: len(phis)]
    dev = float(np.max(np.hypot(*(rec - cart).T)))
    return CrossModelResult(dev, phis, cart, rec, run, dyn)


def _arc_length(shape: EllipseShape, phi0: float, phi1: float) -> float:
    from scipy.integrate import quad

    from .curves import phi_dot

    val, _ = quad(lambda p: 1.0 / phi_dot(p, shape), phi0, phi1, limit=200)
    return val


@dataclass
class ZetaOdeResult:
    max_dev: float
    skipped: bool
    reason: str
    thetas: np.ndarray
    zeta_ode: np.ndarray
    zeta_dds: np.ndarray


def zeta_ode_check(shape: EllipseShape, n: float, rho0: float = 1.0, zeta0: float = math.pi / 2,
                   phi0: float = math.pi / 2, span: float = 2 * math.pi,
                   settings: IntegratorSettings | None = None,
                   singular_floor: float = SINGULAR_FLOOR) -> ZetaOdeResult:
    """zeta(Theta) from the second-order equation versus zeta from (rho, zeta, phi).

    If sin(zeta) reaches the singular floor the comparison is skipped and the
    result says so.
    """
    settings = settings or IntegratorSettings()
    empty = np.empty(0)
    try:
        zt = integrate_zeta_theta(n, shape, rho0, zeta0, phi0, span, settings, singular_floor)
    except SingularityError as exc:
        return ZetaOdeResult(math.nan, True, str(exc), empty, empty, empty)
    arc = _arc_length(shape, phi0, phi0 + span)
    dyn = integrate_ellipse_dds(n, shape, rho0, zeta0, phi0, 0.0, 1.05 * arc, settings)
    thetas = zt.t[zt.t <= dyn.phi[-1]]
    ref = np.array([dyn.traj.sample_at(dyn.time_at_phi(th))[1] for th in thetas])
    got = zt.y[: len(thetas), 0]
    return ZetaOdeResult(float(np.max(np.abs(got - ref))), False, "", thetas, got, ref)
