"""
Outer-loop force laws and the hierarchical inner loop.

The outer loop returns a force vector ``F`` (inertial frame, same sign
convention as the dynamics: the rotors produce ``-F``). Thrust is ``|F|``,
the desired attitude aligns body ``e3`` with ``F`` and adds a yaw heading,
and a geometric PD produces the body torque.
"""

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import YawSingularity, ZeroForce
from .geometry import E3, cross, norm, orthogonal_projector, vee

FORCE_FLOOR = 0.1


@dataclass
class LandingGains:
    kp12: float = 4.0
    kp3: float = 1.75
    kd12: float = 4.0
    kd3: float = 4.0
    phi_star: float = 0.0

    def __post_init__(self):
        if min(self.kp12, self.kp3, self.kd12, self.kd3) <= 0:
            raise ValueError("landing gains must be positive")
        if self.phi_star < 0:
            raise ValueError("phi_star must be non-negative")

    def Kp(self, eta_t):
        return self.kp12 * orthogonal_projector(eta_t) + self.kp3 * np.outer(eta_t, eta_t)

    def Kd(self, eta_t):
        return self.kd12 * orthogonal_projector(eta_t) + self.kd3 * np.outer(eta_t, eta_t)


@dataclass
class WindowGains:
    kp: float = 1.0
    kd: float = 0.8
    kphi: float = 1.0
    phi_star: float = 0.3
    eps: float = 0.18
    delta: float = 0.05

    def __post_init__(self):
        if min(self.kp, self.kd, self.kphi, self.phi_star, self.eps, self.delta) <= 0:
            raise ValueError("window gains, phi_star, eps and delta must be positive")


@dataclass
class AttitudeGains:
    k_R: float = 1000.0
    k_omega: float = 10.0

    def __post_init__(self):
        if self.k_R <= 0 or self.k_omega <= 0:
            raise ValueError("attitude gains must be positive")


@dataclass
class ForceCommand:
    F: np.ndarray
    yaw_d: float


def landing_force(q_t, phi_t, gains, eta_t, mass, gravity):
    """``K_p q_t + K_d (phi_t - eta_t phi*) + m g e3``; ``phi* = 0`` is the nominal law."""
    q_t = np.asarray(q_t, dtype=float)
    phi_t = np.asarray(phi_t, dtype=float)
    eta_t = np.asarray(eta_t, dtype=float)
    # diagonal gains in the (pad plane, pad normal) split, applied without forming matrices
    e = phi_t - eta_t * gains.phi_star
    qn, en = float(eta_t @ q_t), float(eta_t @ e)
    return (
        gains.kp12 * q_t
        + (gains.kp3 - gains.kp12) * qn * eta_t
        + gains.kd12 * e
        + (gains.kd3 - gains.kd12) * en * eta_t
        + mass * gravity * E3
    )


def sigma(q_w, eta_w):
    """1 while the window is ahead (``eta . q_w < 0``), 0 once crossed."""
    return 0 if float(np.dot(eta_w, q_w)) >= 0.0 else 1


def window_force(qbar_w, phi_w, q_w, eta_w, gains, mass, gravity):
    if sigma(q_w, eta_w) == 0:
        return np.zeros(3)
    eta_w = np.asarray(eta_w, dtype=float)
    P = orthogonal_projector(eta_w)
    return (
        gains.kp * (P @ qbar_w)
        + gains.kd * (P @ phi_w)
        + gains.kphi * eta_w * (float(eta_w @ phi_w) - gains.phi_star)
        + mass * gravity * E3
    )


@dataclass
class GainCheck:
    name: str
    value: float
    threshold: float
    passed: bool
    strict: bool = True
    symbol: str = ""
    rule: str = ""

    @property
    def margin(self):
        return self.value - self.threshold

    def line(self):
        op = ">" if self.strict else ">="
        if self.passed:
            return f"PASS {self.symbol} = {self.value:.2f} {op} {self.threshold:.2f} (margin {self.margin:+.3f})"
        return (
            f"FAIL {self.symbol} = {self.value:.2f}, requires {self.rule} = {self.threshold:.2f}"
            f" (margin {self.margin:+.3f})"
        )


@dataclass
class GainReport:
    checks: List[GainCheck] = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def lines(self):
        return [c.line() for c in self.checks]


def validate_gains(window_gains, landing_gains, r_w, delta_accel_max, eta_t, eta_w):
    """Check the sufficient gain conditions of the window and landing laws.

    ``delta_accel_max`` bounds the disturbance at acceleration level, either
    as a scalar norm bound or a 3-vector of per-axis bounds; the projections
    on ``eta_w`` and ``eta_t`` are taken from it.

    * window, lateral: ``kd^2 / kp > r_w / 2``
    * window, along-normal: ``phi*_w > |eta_w . Delta|max / kphi + eps``
    * landing: ``phi*_t >= |eta_t . Delta|max / kd3`` (inclusive)
    """
    d = np.atleast_1d(np.asarray(delta_accel_max, dtype=float))
    if d.size == 1:
        along_w = along_t = float(abs(d[0]))
    else:
        along_w = float(np.abs(eta_w) @ np.abs(d))
        along_t = float(np.abs(eta_t) @ np.abs(d))

    wg, lg = window_gains, landing_gains
    ratio = wg.kd**2 / wg.kp
    checks = [
        GainCheck(
            "window_lateral",
            ratio,
            0.5 * r_w,
            ratio > 0.5 * r_w,
            True,
            "k_d²/k_p",
            "k_d²/k_p > r_w/2",
        ),
    ]
    need_w = along_w / wg.kphi + wg.eps
    checks.append(
        GainCheck(
            "window_normal_flow",
            wg.phi_star,
            need_w,
            wg.phi_star > need_w,
            True,
            "phi*_w",
            "phi*_w > |eta_w.Delta|max/k_phi + eps",
        )
    )
    need_t = along_t / lg.kd3
    # the bound is inclusive; allow round-off at the boundary
    ok_t = lg.phi_star >= need_t - 1e-12 * max(1.0, need_t)
    checks.append(
        GainCheck(
            "landing_vertical_flow",
            lg.phi_star,
            need_t,
            ok_t,
            False,
            "phi*_t",
            "phi*_t >= |eta_t.Delta|max/k_d3",
        )
    )
    return GainReport(checks)


def camera_alignment_yaw(direction, boresight_body):
    """Yaw that turns the horizontal part of a body-fixed boresight onto ``direction``."""
    dh = math.atan2(direction[1], direction[0])
    bh = math.atan2(boresight_body[1], boresight_body[0])
    return math.atan2(math.sin(dh - bh), math.cos(dh - bh))


def attitude_setpoint(F, yaw_d, floor=FORCE_FLOOR):
    """Return ``(F_T, R_d)`` with ``R_d e3 = F/|F|`` and heading from ``yaw_d``."""
    F = np.asarray(F, dtype=float)
    FT = norm(F)
    if not FT > floor:
        raise ZeroForce(f"commanded force {FT:.3e} N below floor {floor} N")
    b3 = F / FT
    heading = np.array([math.cos(yaw_d), math.sin(yaw_d), 0.0])
    b1 = heading - b3 * float(heading @ b3)
    n1 = norm(b1)
    if n1 < 1e-6:
        raise YawSingularity("yaw heading is parallel to the thrust direction")
    b1 /= n1
    b2 = cross(b3, b1)
    return FT, np.column_stack([b1, b2, b3])


def attitude_torque(state, R_d, gains, inertia):
    """Geometric PD on SO(3) with gyroscopic feed-forward, zero desired rate."""
    R = state.R
    e_R = 0.5 * vee(R_d.T @ R - R.T @ R_d)
    w = state.omega
    return -gains.k_R * e_R - gains.k_omega * w + cross(w, inertia @ w)
