import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings
from hypothesis import strategies as st

from pursuit_lab.analysis import (
    SectionCrossing,
    _arc_length,
    invariance_check,
    limit_cycle_detect,
    match_parameter,
    max_workers,
    poincare_crossings,
    radial_convergence,
    reparameterization_check,
    scaled_ellipse_radius,
    wrap_angle,
)
from pursuit_lab.curves import EllipseShape, get_curve
from pursuit_lab.dynsys import integrate_circle_dds, integrate_ellipse_dds
from pursuit_lab.errors import PursuitLabError
from pursuit_lab.integrate import IntegratorSettings

ELLIPSE = EllipseShape(1.0, 0.5)


def test_wrap_angle():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    np.testing.assert_allclose(wrap_angle(np.array([0.0, 2 * math.pi + 0.1])), [0.0, 0.1], atol=1e-15)


def test_max_workers_env(monkeypatch):
    monkeypatch.delenv("PURSUIT_LAB_THREADS", raising=False)
    assert max_workers() == 3
    monkeypatch.setenv("PURSUIT_LAB_THREADS", "1")
    assert max_workers() == 1
    monkeypatch.setenv("PURSUIT_LAB_THREADS", "0")
    assert max_workers() == 1
    monkeypatch.setenv("PURSUIT_LAB_THREADS", "many")
    with pytest.raises(ValueError):
        max_workers()


# --- invariance ---------------------------------------------------------------

def test_invariance_example_passes():
    rep = invariance_check(ELLIPSE, 0.5, (0, 0), tol=1e-3)
    assert rep.passed and rep.pass_ == (rep.max_pursuer_deviation <= rep.tolerance)
    assert [a.k for a in rep.anchors] == [0, 1, 2, 3, 4]
    assert not rep.captured


def test_invariance_circle_trivial():
    rep = invariance_check(EllipseShape(1.0, 1.0), 0.5, (0, 0), tol=1e-3)
    assert rep.passed
    assert rep.max_pursuer_deviation < 1e-9


def test_invariance_coarse_fixed_step_fails_tight_tolerance():
    rep = invariance_check(ELLIPSE, 0.5, (0, 0), tol=1e-12, settings=IntegratorSettings.fixed(1e-2))
    assert not rep.passed
    assert 1e-12 < rep.max_pursuer_deviation < 1e-5


def test_invariance_step_refinement_monotone():
    devs = [invariance_check(ELLIPSE, 0.5, settings=IntegratorSettings.fixed(h)).max_pursuer_deviation
            for h in (0.1, 0.05, 0.025, 0.0125)]
    assert all(b < a for a, b in zip(devs, devs[1:])), devs


def test_invariance_generic_anchors():
    rep = invariance_check(ELLIPSE, 0.5, anchor_step=0.3, tol=1e-3)
    assert rep.passed
    assert len(rep.anchors) == int(2 * math.pi / 0.3) + 1


def test_anchor_evaders_coincide():
    rep = invariance_check(ELLIPSE, 0.5, anchor_step=0.7)
    for a in rep.anchors:
        evs = [get_curve(k)(p, ELLIPSE).pos for k, p in zip(("standard", "angvel", "arclen"), a.params)]
        assert max(math.dist(u, v) for u in evs for v in evs) <= 1e-9


def test_invariance_reports_capture():
    rep = invariance_check(ELLIPSE, 2.0, (0.3, 0.0), tol=1e-3)
    assert set(rep.captured) == {"standard", "angvel", "arclen"}
    assert rep.anchors[0].k == 0


@pytest.mark.parametrize("kind", ["angvel", "arclen"])
def test_match_parameter_hits_position(kind):
    for t in np.linspace(-4, 9, 27):
        pos = get_curve("standard")(t, ELLIPSE).pos
        p = match_parameter(kind, pos, ELLIPSE, near=t + (math.pi / 2 if kind == "arclen" else 0))
        assert math.dist(get_curve(kind)(p, ELLIPSE).pos, pos) <= 1e-12


def test_sine_warp_leaves_path_unchanged():
    tol = 1e-9
    dev = reparameterization_check(ELLIPSE, 0.5, lambda t: t + 0.3 * math.sin(t),
                                   lambda t: 1 + 0.3 * math.cos(t), settings=IntegratorSettings(rel_tol=tol))
    assert dev <= 10 * tol


@hsettings(max_examples=8)
@given(st.floats(-0.9, 0.9), st.floats(0.5, 3.0), st.floats(0.1, 0.9))
def test_random_warps_leave_path_unchanged(c, w, n):
    tol = 1e-9
    dev = reparameterization_check(ELLIPSE, n, lambda t: t + c / w * math.sin(w * t),
                                   lambda t: 1 + c * math.cos(w * t), settings=IntegratorSettings(rel_tol=tol))
    assert dev <= 10 * tol


# --- Poincare sections --------------------------------------------------------

def test_five_orbits_give_five_crossings():
    per = _arc_length(ELLIPSE, 0, 2 * math.pi)
    run = integrate_ellipse_dds(0.5, ELLIPSE, 1.0, math.pi / 2, t1=5 * per + 0.25 * per)
    cr = poincare_crossings(run)
    assert [c.k for c in cr] == [1, 2, 3, 4, 5]
    assert all(-math.pi < c.zeta_wrapped <= math.pi for c in cr)


def test_crossings_lie_on_trajectory():
    run = integrate_ellipse_dds(0.5, ELLIPSE, 1.0, math.pi / 2, t1=10 * math.pi)
    for c in poincare_crossings(run):
        rho, zeta, phi = run.traj.sample_at(c.t)
        assert abs(rho - c.rho) <= 1e-8 and abs(zeta - c.zeta) <= 1e-8
        assert abs(math.remainder(phi - math.pi / 2, 2 * math.pi)) <= 1e-10


def test_crossings_need_two():
    run = integrate_ellipse_dds(0.5, ELLIPSE, 1.0, math.pi / 2, t1=1.0)
    with pytest.raises(PursuitLabError):
        poincare_crossings(run)


def test_crossings_reject_circular_run():
    run = integrate_circle_dds(0.5, 1.0, 1.0, math.pi / 2, 0.0, 10.0)
    with pytest.raises(ValueError):
        poincare_crossings(run)


def test_circle_sections_converge_to_equilibrium():
    run = integrate_ellipse_dds(0.5, EllipseShape(1.0, 1.0), 1.0, math.pi / 2, t1=10 * math.pi)
    res = limit_cycle_detect(poincare_crossings(run), tol=1e-3)
    assert res.converged
    assert res.cycle_point == pytest.approx((math.sqrt(3) / 2, math.pi / 3), abs=1e-3)


def test_ellipse_limit_cycle():
    run = integrate_ellipse_dds(0.5, ELLIPSE, 1.0, math.pi / 2, t1=10 * math.pi)
    res = limit_cycle_detect(poincare_crossings(run), tol=1e-3)
    assert res.converged and res.gaps_nonincreasing
    assert res.last_gap == res.gaps[-1] <= 1e-3


def test_synthetic_constant_crossings():
    cr = [SectionCrossing(k, 0.7, 1.1) for k in range(1, 5)]
    res = limit_cycle_detect(cr)
    assert res.converged and res.last_gap == 0.0 and res.gaps_nonincreasing
    with pytest.raises(ValueError):
        limit_cycle_detect(cr[:2])


def test_limit_cycle_wraps_zeta():
    cr = [SectionCrossing(1, 1.0, 3.0), SectionCrossing(2, 1.0, math.pi - 1e-4), SectionCrossing(3, 1.0, -math.pi + 1e-4)]
    assert limit_cycle_detect(cr).last_gap == pytest.approx(2e-4, abs=1e-12)


# --- radial convergence -------------------------------------------------------

def test_radial_on_circle_is_zero():
    th = np.linspace(0, 2 * math.pi, 50)
    pts = np.column_stack([0.5 * np.cos(th) + 1, 0.5 * np.sin(th) - 2])
    assert radial_convergence(pts, (1, -2), 0.5, 0.2) == pytest.approx(0.0, abs=1e-15)


def test_radial_callable_and_errors():
    shape = EllipseShape(2.0, 1.0)
    th = np.linspace(0, 2 * math.pi, 40)
    pts = np.column_stack([1.0 * np.cos(th), 0.5 * np.sin(th)])
    assert radial_convergence(pts, expected_r=scaled_ellipse_radius(shape, 0.5)) <= 1e-14
    with pytest.raises(ValueError):
        radial_convergence(pts, tail_fraction=1.0)
    with pytest.raises(ValueError):
        radial_convergence(np.empty((0, 2)), tail_fraction=0.5)
