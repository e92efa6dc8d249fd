import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ibvsquad.control import (
    AttitudeGains,
    LandingGains,
    WindowGains,
    attitude_setpoint,
    attitude_torque,
    camera_alignment_yaw,
    landing_force,
    sigma,
    validate_gains,
    window_force,
)
from ibvsquad.dynamics import VehicleParams, VehicleState, Wrench
from ibvsquad.errors import YawSingularity, ZeroForce
from ibvsquad.geometry import E1, E3, angle_between, normalize, orthonormality_error, rot_x
from ibvsquad.simulator import rk4_step

M, G = 1.676, 9.81
finite = st.floats(-5.0, 5.0, allow_nan=False)
vec3 = st.tuples(finite, finite, finite).map(np.array)


def test_landing_force_hover():
    assert np.array_equal(landing_force(np.zeros(3), np.zeros(3), LandingGains(), E3, M, G), M * G * E3)


def test_landing_force_reference_gains():
    F = landing_force(np.array([0.0, 0.0, -0.5]), np.array([0.0, 0.0, 0.2]), LandingGains(), E3, M, G)
    assert np.allclose(F, [0.0, 0.0, 16.3666], atol=1e-4)
    assert F[2] == pytest.approx(-0.875 + 0.8 + M * G, abs=1e-12)
    F2 = landing_force(
        np.array([0.0, 0.0, -0.5]), np.array([0.0, 0.0, 0.2]), LandingGains(phi_star=0.1), E3, M, G
    )
    assert F[2] - F2[2] == pytest.approx(0.4, abs=1e-12)


@given(vec3, vec3, st.floats(0.0, 1.0))
def test_landing_force_matches_matrix_form(q, phi, phi_star):
    g = LandingGains(kp12=3.0, kp3=1.5, kd12=2.5, kd3=4.0, phi_star=phi_star)
    eta = normalize(np.array([0.1, -0.2, 1.0]))
    ref = g.Kp(eta) @ q + g.Kd(eta) @ (phi - eta * phi_star) + M * G * E3
    assert np.allclose(landing_force(q, phi, g, eta, M, G), ref, atol=1e-12)


def test_landing_force_equilibrium():
    g = LandingGains(phi_star=0.3)
    assert np.array_equal(landing_force(np.zeros(3), E3 * 0.3, g, E3, M, G), M * G * E3)


def test_sigma_examples():
    assert sigma(-E1, E1) == 1
    assert sigma(E1, E1) == 0
    assert sigma(np.array([0.0, 0.3, 0.1]), E1) == 0


def test_window_force_examples():
    g = WindowGains()
    assert np.array_equal(window_force(-E1, E1, E1, E1, g, M, G), np.zeros(3))
    F = window_force(-E1, E1 * g.phi_star, -E1, E1, g, M, G)
    assert np.allclose(F, M * G * E3, atol=1e-15)
    F = window_force(np.array([-1.0, 0.2, 0.0]), np.array([0.1, 0.05, 0.0]), -E1, E1, g, M, G)
    assert np.allclose(F, [-0.2, 0.24, M * G], atol=1e-12)
    assert M * G == pytest.approx(16.4416, abs=1e-4)


@given(vec3, vec3, vec3)
def test_window_force_normal_component(qbar, phi, q):
    g = WindowGains()
    eta = normalize(np.array([1.0, 0.3, -0.2]))
    F = window_force(qbar, phi, q, eta, g, M, G)
    s = sigma(q, eta)
    rest = F - s * (g.kphi * eta * (eta @ phi - g.phi_star) + M * G * E3)
    assert abs(eta @ rest) < 1e-12
    assert np.array_equal(s * F, F)


def test_validate_gains_lateral_rule():
    rep = validate_gains(WindowGains(), LandingGains(), 1.0, 0.0, E3, E1)
    assert rep.passed
    lat = rep.checks[0]
    assert lat.value == pytest.approx(0.64)
    assert lat.margin == pytest.approx(0.14)
    rep = validate_gains(WindowGains(), LandingGains(), 1.4, 0.0, E3, E1)
    assert not rep.passed
    line = rep.checks[0].line()
    assert line.startswith("FAIL") and "k_d²/k_p > r_w/2" in line


def test_validate_gains_normal_flow_without_disturbance():
    g = WindowGains(phi_star=0.3, eps=0.25)
    assert validate_gains(g, LandingGains(), 1.0, 0.0, E3, E1).checks[1].passed
    g = WindowGains(phi_star=0.3, eps=0.3)
    assert not validate_gains(g, LandingGains(), 1.0, 0.0, E3, E1).checks[1].passed


def test_validate_gains_landing_boundary_inclusive():
    accel = np.array([0.0, 0.0, 0.5])
    assert not validate_gains(WindowGains(), LandingGains(phi_star=0.1), 1.0, accel, E3, E1).checks[2].passed
    assert validate_gains(WindowGains(), LandingGains(phi_star=0.125), 1.0, accel, E3, E1).checks[2].passed


def test_attitude_setpoint_examples():
    FT, Rd = attitude_setpoint(M * G * E3, 0.0)
    assert FT == pytest.approx(M * G)
    assert np.allclose(Rd, np.eye(3), atol=1e-15)
    F = np.array([0.0, 0.1 * M * G, M * G])
    FT, Rd = attitude_setpoint(F, 0.0)
    assert np.allclose(Rd[:, 2], F / np.linalg.norm(F), atol=1e-15)
    assert orthonormality_error(Rd) < 1e-12
    with pytest.raises(ZeroForce):
        attitude_setpoint(np.zeros(3), 0.0)
    with pytest.raises(YawSingularity):
        attitude_setpoint(np.array([5.0, 0.0, 0.0]), 0.0)


@settings(max_examples=60)
@given(vec3.filter(lambda v: np.linalg.norm(v) > 0.2 and abs(v[2]) > 0.1), st.floats(-3.0, 3.0), st.floats(1.0, 10.0))
def test_attitude_setpoint_properties(F, yaw, scale):
    FT, Rd = attitude_setpoint(F, yaw)
    assert orthonormality_error(Rd) < 1e-12
    assert np.linalg.det(Rd) == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(Rd[:, 2], F / FT, atol=1e-12)
    FT2, Rd2 = attitude_setpoint(scale * F, yaw)
    assert FT2 == pytest.approx(scale * FT, rel=1e-12)
    assert np.allclose(Rd2, Rd, atol=1e-12)


def test_attitude_torque_examples():
    g = AttitudeGains()
    I = VehicleParams().inertia
    s = VehicleState.at_rest(np.zeros(3))
    assert np.array_equal(attitude_torque(s, np.eye(3), g, I), np.zeros(3))
    th = 0.05
    s.R = rot_x(th)
    tau = attitude_torque(s, np.eye(3), g, I)
    assert np.allclose(tau, [-g.k_R * math.sin(th), 0.0, 0.0], atol=1e-12)


def test_inner_loop_settles_from_20_degrees():
    g = AttitudeGains(k_R=5.0, k_omega=0.5)
    p = VehicleParams()
    s = VehicleState(np.zeros(3), np.zeros(3), rot_x(math.radians(20.0)), np.zeros(3))
    dt, t = 1e-3, 0.0
    while t < 0.5:
        tau = attitude_torque(s, np.eye(3), g, p.inertia)
        s = rk4_step(s, Wrench(p.weight, tau), np.zeros(3), p, dt)
        t += dt
    assert math.degrees(angle_between(s.R[:, 2], E3)) < 1.0


def test_camera_alignment_yaw():
    boresight = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
    yaw = camera_alignment_yaw(E1, boresight)
    assert yaw == pytest.approx(math.pi / 4)


@pytest.mark.parametrize(
    "cls,kwargs",
    [
        (LandingGains, dict(kp12=0.0)),
        (LandingGains, dict(phi_star=-0.1)),
        (WindowGains, dict(kd=-1.0)),
        (WindowGains, dict(phi_star=0.0)),
        (AttitudeGains, dict(k_R=0.0)),
    ],
)
def test_gain_invariants(cls, kwargs):
    with pytest.raises(ValueError):
        cls(**kwargs)
