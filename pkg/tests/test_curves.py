import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pursuit_lab.curves import (
    CURVES,
    EllipseShape,
    circle_unit_speed,
    ellipse_argument,
    ellipse_const_angvel,
    ellipse_const_speed,
    ellipse_standard,
    param_from_argument,
    phi_dot,
)

SHAPE = EllipseShape(1.0, 0.5)
ELLIPSE_CURVES = [ellipse_standard, ellipse_const_angvel, ellipse_const_speed]


def approx_vec(v, expected, tol=1e-6):
    assert v == pytest.approx(expected, abs=tol)


# --- examples ---------------------------------------------------------------

def test_standard_examples():
    ev = ellipse_standard(0.0, SHAPE)
    approx_vec(ev.pos, (1, 0), 1e-15)
    approx_vec(ev.vel, (0, 0.5), 1e-15)
    ev = ellipse_standard(math.pi / 2, SHAPE)
    approx_vec(ev.pos, (0, 0.5), 1e-15)
    approx_vec(ev.vel, (-1, 0), 1e-15)
    approx_vec(ellipse_standard(math.pi / 4, SHAPE).pos, (0.7071067811865475, 0.3535533905932738), 1e-15)


def test_const_angvel_examples():
    approx_vec(ellipse_const_angvel(0.0, SHAPE).pos, (1, 0), 1e-15)
    approx_vec(ellipse_const_angvel(math.pi / 4, SHAPE).pos, (0.4472135954999579, 0.4472135954999579), 1e-15)
    approx_vec(ellipse_const_angvel(math.pi / 2, SHAPE).pos, (0, 0.5), 1e-15)


def test_const_speed_examples():
    ev = ellipse_const_speed(math.pi / 2, SHAPE)
    approx_vec(ev.pos, (1, 0), 1e-15)
    approx_vec(ev.time_vel, (0, 1), 1e-15)
    ev = ellipse_const_speed(math.pi, SHAPE)
    approx_vec(ev.pos, (0, 0.5), 1e-15)
    approx_vec(ev.time_vel, (-1, 0), 1e-15)
    ev = ellipse_const_speed(0.0, SHAPE)
    approx_vec(ev.pos, (0, -0.5), 1e-15)
    approx_vec(ev.time_vel, (1, 0), 1e-15)


def test_const_speed_vel_is_time_vel_over_phidot():
    for phi in np.linspace(-3, 9, 37):
        ev = ellipse_const_speed(phi, SHAPE)
        w = phi_dot(phi, SHAPE)
        approx_vec(ev.vel, (ev.time_vel.x / w, ev.time_vel.y / w), 1e-14)


def test_phi_dot_examples():
    assert phi_dot(math.pi / 2, SHAPE) == pytest.approx(4.0, rel=1e-15)
    assert phi_dot(0.0, SHAPE) == pytest.approx(0.5, rel=1e-15)
    for phi in (0.0, 0.3, 2.0, -7.0):
        assert phi_dot(phi, EllipseShape(2, 2)) == pytest.approx(0.5, rel=1e-15)


def test_circle_examples():
    ev = circle_unit_speed(0.0, 1.0)
    approx_vec(ev.pos, (1, 0), 1e-15)
    approx_vec(ev.vel, (0, 1), 1e-15)
    ev = circle_unit_speed(2 * math.pi / 2, 2.0)
    approx_vec(ev.pos, (0, 2), 1e-15)
    approx_vec(ev.vel, (-1, 0), 1e-15)
    approx_vec(circle_unit_speed(1.0, 1.0).pos, (0.5403023058681398, 0.8414709848078965), 1e-15)


def test_invalid_shapes():
    for a, b in ((0, 1), (1, -1), (math.inf, 1), (math.nan, 1)):
        with pytest.raises(ValueError):
            EllipseShape(a, b)
    with pytest.raises(ValueError):
        circle_unit_speed(0.0, 0.0)
    with pytest.raises(ValueError):
        CURVES["circle"](0.0, SHAPE)


# --- invariants -------------------------------------------------------------

@pytest.mark.parametrize("curve", ELLIPSE_CURVES)
def test_on_curve_and_tangent(curve):
    rng = np.random.default_rng(7)
    for shape in (SHAPE, EllipseShape(3.0, 0.2), EllipseShape(0.7, 0.7)):
        for p in rng.uniform(-20, 20, 1000):
            ev = curve(p, shape)
            assert shape.implicit(ev.pos) == pytest.approx(1.0, rel=1e-12)
            normal = (ev.pos.x / shape.a**2, ev.pos.y / shape.b**2)
            dot = normal[0] * ev.vel.x + normal[1] * ev.vel.y
            assert abs(dot) <= 1e-12 * math.hypot(*normal) * max(1.0, math.hypot(*ev.vel))


def test_circle_on_curve():
    for t in np.random.default_rng(3).uniform(-30, 30, 1000):
        ev = circle_unit_speed(t, 2.5)
        assert math.hypot(*ev.pos) == pytest.approx(2.5, rel=1e-12)
        assert math.hypot(*ev.vel) == pytest.approx(1.0, rel=1e-12)


def test_constant_angular_velocity():
    h = 1e-6
    for t in np.linspace(-4, 10, 200):
        before = math.atan2(*reversed(ellipse_const_angvel(t - h, SHAPE).pos))
        after = math.atan2(*reversed(ellipse_const_angvel(t + h, SHAPE).pos))
        d = math.remainder(after - before, 2 * math.pi)
        assert d / (2 * h) == pytest.approx(1.0, abs=1e-6)
        assert math.remainder(math.atan2(*reversed(ellipse_const_angvel(t, SHAPE).pos)) - t,
                              2 * math.pi) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-50, 50), st.floats(0.1, 5), st.floats(0.1, 5))
def test_constant_speed(phi, a, b):
    shape = EllipseShape(a, b)
    ev = ellipse_const_speed(phi, shape)
    assert math.hypot(*ev.vel) * phi_dot(phi, shape) == pytest.approx(1.0, abs=1e-10)
    assert math.hypot(*ev.time_vel) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("curve", ELLIPSE_CURVES + [CURVES["circle"]])
def test_velocity_matches_finite_difference(curve):
    h = 1e-6
    shape = SHAPE if curve is not CURVES["circle"] else EllipseShape(1.3, 1.3)
    for p in np.linspace(-6, 12, 150):
        fd = (np.array(curve(p + h, shape).pos) - np.array(curve(p - h, shape).pos)) / (2 * h)
        assert np.max(np.abs(fd - np.array(curve(p, shape).vel))) <= 1e-6


def test_circle_degeneracy():
    shape = EllipseShape(1.7, 1.7)
    # with a == b all three parameterizations are rotations of each other in phase
    for t in np.linspace(0, 2 * math.pi, 50):
        p_std = ellipse_standard(t, shape).pos
        p_ang = ellipse_const_angvel(t, shape).pos
        p_arc = ellipse_const_speed(t + math.pi / 2, shape).pos
        approx_vec(p_ang, p_std, 1e-12)
        approx_vec(p_arc, p_std, 1e-12)
        assert phi_dot(t, shape) == pytest.approx(1 / 1.7, abs=1e-12)


def test_start_conventions():
    for kind, p in (("standard", 0.0), ("angvel", 0.0), ("arclen", math.pi / 2)):
        approx_vec(CURVES[kind](p, SHAPE).pos, (1, 0), 1e-15)


@pytest.mark.parametrize("kind", ["standard", "angvel", "arclen"])
def test_param_from_argument_roundtrip(kind):
    for p in np.linspace(-3, 3, 61):
        pos = CURVES[kind](p, SHAPE).pos
        back = param_from_argument(kind, ellipse_argument(pos, SHAPE), SHAPE, near=p)
        assert back == pytest.approx(p, abs=1e-12)
