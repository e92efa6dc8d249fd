"""
Small 3-D vector and rotation helpers.

All vectors are plain ``numpy`` arrays of shape ``(3,)`` and rotations are
``(3, 3)`` arrays. Functions never mutate their inputs.
"""

import math

import numpy as np

from .errors import DegenerateVector

FLOOR = 1e-9

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])
_I3 = np.eye(3)


def cross(a, b):
    """Cross product of two 3-vectors (faster than ``np.cross`` for one pair)."""
    return np.array(
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    )


def norm(v):
    return math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])


def skew(v):
    """Return the matrix ``S`` with ``S @ x == cross(v, x)``."""
    return np.array(
        [
            [0.0, -v[2], v[1]],
            [v[2], 0.0, -v[0]],
            [-v[1], v[0], 0.0],
        ]
    )


def vee(S):
    """Inverse of :func:`skew` (antisymmetric part is assumed)."""
    return np.array([S[2, 1], S[0, 2], S[1, 0]])


def orthogonal_projector(y):
    """``I - y y^T``: projection onto the plane orthogonal to the unit vector ``y``."""
    y = np.asarray(y, dtype=float)
    return _I3 - np.outer(y, y)


def normalize(v, floor=FLOOR):
    """Return ``v / |v|``.

    Raises
    ------
    DegenerateVector
        If ``|v| <= floor``.
    """
    v = np.asarray(v, dtype=float)
    n = norm(v)
    if not n > floor:
        raise DegenerateVector(f"cannot normalize vector of norm {n:.3e}")
    return v / n


def as_unit(v, tol=1e-12):
    """Normalize ``v`` unless it is already unit length within ``tol`` (then return it unchanged)."""
    v = np.asarray(v, dtype=float)
    if abs(norm(v) - 1.0) <= tol:
        return v.copy()
    return normalize(v)


def expm_so3(w):
    """Rodrigues formula for ``expm(skew(w))``."""
    x, y, z = float(w[0]), float(w[1]), float(w[2])
    t2 = x * x + y * y + z * z
    if t2 < 1e-16:
        # second-order Taylor expansion; error O(theta^3) < 1e-24
        a, b = 1.0, 0.5
    else:
        theta = math.sqrt(t2)
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / t2
    # I + a S + b S^2 with S^2 = w w^T - |w|^2 I
    return np.array(
        [
            [1.0 - b * (y * y + z * z), b * x * y - a * z, b * x * z + a * y],
            [b * x * y + a * z, 1.0 - b * (x * x + z * z), b * y * z - a * x],
            [b * x * z - a * y, b * y * z + a * x, 1.0 - b * (x * x + y * y)],
        ]
    )


def cross_rows(A, B):
    """Row-wise cross product of two ``(N, 3)`` arrays."""
    return np.column_stack(
        [
            A[:, 1] * B[:, 2] - A[:, 2] * B[:, 1],
            A[:, 2] * B[:, 0] - A[:, 0] * B[:, 2],
            A[:, 0] * B[:, 1] - A[:, 1] * B[:, 0],
        ]
    )


def rotate_integrate(R, omega, dt):
    """Advance ``R_dot = R skew(omega)`` over ``dt`` with constant body rate."""
    if dt < 0:
        raise ValueError("dt must be non-negative")
    return R @ expm_so3(np.asarray(omega, dtype=float) * dt)


def reorthonormalize(R):
    """Closest rotation to ``R`` in Frobenius norm (polar projection)."""
    U, _, Vt = np.linalg.svd(R)
    Q = U @ Vt
    if np.linalg.det(Q) < 0:
        U[:, -1] *= -1.0
        Q = U @ Vt
    return Q


def orthonormality_error(R):
    return float(np.max(np.abs(R.T @ R - np.eye(3))))


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def euler_zyx_to_rot(roll, pitch, yaw):
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def rot_to_euler_zyx(R):
    """Return ``(roll, pitch, yaw)`` with ``R = Rz(yaw) Ry(pitch) Rx(roll)``."""
    pitch = -math.asin(max(-1.0, min(1.0, R[2, 0])))
    roll = math.atan2(R[2, 1], R[2, 2])
    yaw = math.atan2(R[1, 0], R[0, 0])
    return roll, pitch, yaw


def angle_between(a, b):
    """Unsigned angle between two non-zero vectors, robust near 0 and pi."""
    return math.atan2(norm(cross(a, b)), float(np.dot(a, b)))
