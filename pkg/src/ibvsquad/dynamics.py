"""
Quadrotor rigid-body model.

Inertial frame with ``e3`` pointing down (altitude is ``-xi_z``)::

    xi_dot    = v
    m v_dot   = -F_T R e3 + m g e3 + Delta
    R_dot     = R skew(Omega)
    I Omega_dot = -Omega x I Omega + Gamma

``Delta`` is a force in newtons; the analysis code works with ``Delta / m``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import E3, cross


@dataclass
class VehicleParams:
    mass: float = 1.676
    inertia: np.ndarray = field(default_factory=lambda: np.diag([0.01, 0.01, 0.02]))
    gravity: float = 9.81

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float)
        if not self.mass > 0:
            raise ValueError("mass must be positive")
        if not self.gravity > 0:
            raise ValueError("gravity must be positive")
        if self.inertia.shape != (3, 3) or not np.allclose(self.inertia, self.inertia.T):
            raise ValueError("inertia must be a symmetric 3x3 matrix")
        if np.linalg.eigvalsh(self.inertia).min() <= 0:
            raise ValueError("inertia must be positive definite")
        self.inertia_inv = np.linalg.inv(self.inertia)

    @property
    def weight(self):
        return self.mass * self.gravity


@dataclass
class VehicleState:
    """Position ``xi`` (m), velocity ``v`` (m/s), body-to-inertial ``R``, body rate ``omega``."""

    xi: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        self.xi = np.asarray(self.xi, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.R = np.asarray(self.R, dtype=float)
        self.omega = np.asarray(self.omega, dtype=float)

    @classmethod
    def at_rest(cls, xi):
        return cls(np.asarray(xi, dtype=float), np.zeros(3), np.eye(3), np.zeros(3))

    def copy(self):
        return VehicleState(self.xi.copy(), self.v.copy(), self.R.copy(), self.omega.copy())


@dataclass
class Wrench:
    thrust: float
    torque: np.ndarray

    def __post_init__(self):
        if self.thrust < 0:
            raise ValueError("thrust must be non-negative")
        self.torque = np.asarray(self.torque, dtype=float)


DISTURBANCE_KINDS = ("zero", "constant", "sinusoid", "horizontal_constant")


@dataclass
class DisturbanceModel:
    """Additive force ``Delta(t)`` in newtons.

    ``horizontal_constant`` strips any component of ``amplitude`` along
    ``horizontal_reference`` (the pad normal) at construction so that
    ``eta_t . Delta == 0`` holds exactly.
    """

    kind: str = "zero"
    amplitude: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frequency: float = 0.0
    phase: float = 0.0
    horizontal_reference: np.ndarray = field(default_factory=lambda: E3.copy())

    def __post_init__(self):
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        self.horizontal_reference = np.asarray(self.horizontal_reference, dtype=float)
        if self.kind == "horizontal_constant":
            eta = self.horizontal_reference
            a = self.amplitude - eta * float(eta @ self.amplitude)
            # one more pass kills the round-off left by the first projection
            self.amplitude = a - eta * float(eta @ a)

    def max_norm(self):
        return 0.0 if self.kind == "zero" else float(np.linalg.norm(self.amplitude))

    def max_along(self, direction):
        """``max_t |direction . Delta(t)|``."""
        if self.kind == "zero":
            return 0.0
        return abs(float(np.dot(direction, self.amplitude)))


def disturbance_at(model, t):
    if model.kind == "zero":
        return np.zeros(3)
    if model.kind in ("constant", "horizontal_constant"):
        return model.amplitude.copy()
    return model.amplitude * math.sin(2.0 * math.pi * model.frequency * t + model.phase)


def translational_derivative(state, thrust, delta, params):
    """Return ``(xi_dot, v_dot)``."""
    if thrust < 0:
        raise ValueError("thrust must be non-negative")
    m = params.mass
    v_dot = (-thrust * state.R[:, 2] + params.weight * E3 + delta) / m
    return state.v.copy(), v_dot


def rotational_derivative(state, torque, params):
    I = params.inertia
    w = state.omega
    return params.inertia_inv @ (-cross(w, I @ w) + torque)
