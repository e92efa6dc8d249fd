"""
Virtual cameras and image features.

Every feature is synthesized from ground-truth geometry the way an ideal
spherical camera would report it: unit bearings to landmarks, their
centroid, the window frame recovered from edge lines, and translational
optical flow (velocity over distance to a textured plane).

Bearings are expressed in the inertial frame unless a name says otherwise;
camera-frame bearings are derotated with the attitude ``R`` and the camera
mount, which is what makes the centroids attitude-invariant.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    CapOutsidePlane,
    DegenerateDistance,
    DegenerateVector,
    ParallelLines,
    WindowPlaneSingularity,
)
from .geometry import E3, FLOOR, as_unit, cross, norm, normalize, rot_x, rot_z

DISTANCE_FLOOR = 1e-6
PLANE_FLOOR = 1e-9

FORWARD_MOUNT = rot_z(-math.pi / 4) @ rot_x(math.pi / 2)


# ---------------------------------------------------------------------------
# scene description
# ---------------------------------------------------------------------------


@dataclass
class LandingPad:
    """Coplanar markers ``s_i`` on the target plane with unit normal ``normal``."""

    markers: np.ndarray
    normal: np.ndarray = field(default_factory=lambda: E3.copy())

    def __post_init__(self):
        self.markers = np.atleast_2d(np.asarray(self.markers, dtype=float))
        self.normal = as_unit(self.normal)
        if self.markers.shape[0] < 3 or self.markers.shape[1] != 3:
            raise ValueError("a landing pad needs at least three 3-D markers")
        self.center = self.markers.mean(axis=0)
        off = (self.markers - self.center) @ self.normal
        if np.max(np.abs(off)) > 1e-9:
            raise ValueError("pad markers must lie in the plane orthogonal to the pad normal")
        rel = self.markers - self.center
        if np.linalg.matrix_rank(rel, tol=1e-9) < 2:
            raise ValueError("pad markers are collinear")

    @classmethod
    def square(cls, half_size, center=(0.0, 0.0, 0.0), normal=E3):
        """Four markers on the axes at distance ``half_size`` from ``center``."""
        c = np.asarray(center, dtype=float)
        a = float(half_size)
        pts = [c + [a, 0, 0], c + [0, a, 0], c + [-a, 0, 0], c + [0, -a, 0]]
        return cls(np.array(pts), normal)

    @property
    def n(self):
        return self.markers.shape[0]


@dataclass
class WindowSpec:
    """Rectangular window in a wall.

    ``normal`` points from the approach side into the wall. Edges 1 and 3
    run along ``rho = u x normal`` and sit at ``u = -width/2`` and
    ``u = +width/2``; edges 2 and 4 run along ``u``. Corner ``i`` starts
    edge ``i``.
    """

    center: np.ndarray
    normal: np.ndarray
    u_axis: np.ndarray
    width: float
    height: float

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.normal = as_unit(self.normal)
        self.u_axis = np.asarray(self.u_axis, dtype=float)
        if abs(float(self.u_axis @ self.normal)) > 1e-9:
            raise ValueError("window u_axis must be orthogonal to its normal")
        self.u_axis = as_unit(self.u_axis)
        if not (self.width > 0 and self.height > 0):
            raise ValueError("window width and height must be positive")
        self.rho_axis = cross(self.u_axis, self.normal)
        c, u, r = self.center, self.u_axis, self.rho_axis
        hw, hh = 0.5 * self.width, 0.5 * self.height
        self.corners = np.array(
            [
                c - hw * u - hh * r,
                c - hw * u + hh * r,
                c + hw * u + hh * r,
                c + hw * u - hh * r,
            ]
        )
        self.edge_dirs = np.array([r, u, -r, -u])

    @property
    def r_w(self):
        """Characteristic opening size used by the safety-region rules."""
        return min(self.width, self.height)


@dataclass
class CameraModel:
    mount: np.ndarray = field(default_factory=lambda: np.eye(3))
    fov_half_angle: float = math.radians(60.0)
    intrinsics: Optional[np.ndarray] = None

    def __post_init__(self):
        self.mount = np.asarray(self.mount, dtype=float)
        if not 0.0 < self.fov_half_angle < math.pi / 2:
            raise ValueError("fov_half_angle must lie in (0, pi/2)")
        self._cos_fov = math.cos(self.fov_half_angle)

    def boresight_body(self):
        return self.mount[:, 2].copy()

    def sees(self, bearings_cam):
        """True iff every camera-frame bearing lies inside the FOV cone."""
        return bool(bearings_cam[:, 2].min() >= self._cos_fov)


@dataclass
class SceneGeometry:
    window: Optional[WindowSpec] = None
    pad: Optional[LandingPad] = None
    down_camera: CameraModel = field(default_factory=CameraModel)
    forward_camera: CameraModel = field(
        default_factory=lambda: CameraModel(FORWARD_MOUNT, math.radians(60.0))
    )
    # visibility driven by range sign only (no FOV cone); used by the
    # analysis suites that study a single control law
    ideal_cameras: bool = False


@dataclass
class FeatureNoise:
    bearing_sigma: float = 0.0
    flow_relative_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.bearing_sigma < 0 or self.flow_relative_sigma < 0:
            raise ValueError("noise sigmas must be non-negative")

    @property
    def is_zero(self):
        return self.bearing_sigma == 0.0 and self.flow_relative_sigma == 0.0


@dataclass
class FeatureSnapshot:
    """What the virtual cameras report at one instant.

    Measured fields are ``None`` when the corresponding target is not
    visible. ``d_t``, ``d_o``, ``d_e``, ``q_t_true`` and ``q_w_true`` are
    ground-truth diagnostics for logging; controllers never read them.
    """

    pad_visible: bool = False
    window_visible: bool = False
    q_t: Optional[np.ndarray] = None
    phi_t: Optional[np.ndarray] = None
    q_w: Optional[np.ndarray] = None
    qbar_w: Optional[np.ndarray] = None
    eta_w: Optional[np.ndarray] = None
    l_e: Optional[np.ndarray] = None
    edge_index: Optional[int] = None
    alpha_w: Optional[float] = None
    phi_w: Optional[np.ndarray] = None
    window_bearings: Optional[np.ndarray] = None
    d_t: float = math.nan
    d_o: float = math.nan
    d_e: float = math.nan
    q_t_true: Optional[np.ndarray] = None
    q_w_true: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# spherical projection and centroids
# ---------------------------------------------------------------------------


def spherical_project(P, floor=FLOOR):
    try:
        return normalize(P, floor)
    except DegenerateVector:
        raise DegenerateVector("landmark coincides with the camera center") from None


def bearings(points, xi, floor=FLOOR):
    """Unit vectors from ``xi`` to each row of ``points`` (inertial frame)."""
    P = np.asarray(points, dtype=float) - xi
    n = np.sqrt(np.einsum("ij,ij->i", P, P))
    if n.min() <= floor:
        raise DegenerateVector("landmark coincides with the camera center")
    return P / n[:, None]


def to_camera(bearings_inertial, R, mount):
    """Express inertial bearings in a camera frame: ``(R mount)^T p``."""
    return bearings_inertial @ (R @ mount)


def derotate(bearings_cam, R, mount):
    """Inverse of :func:`to_camera`."""
    return bearings_cam @ (R @ mount).T


def centroid(bearing_rows):
    return bearing_rows.sum(axis=0) * (-1.0 / bearing_rows.shape[0])


def pad_centroid(xi, pad):
    """``q_t = -(1/n) sum p_i`` for the pad markers."""
    return centroid(bearings(pad.markers, np.asarray(xi, dtype=float)))


def window_centroid(xi, window):
    return centroid(bearings(window.corners, np.asarray(xi, dtype=float)))


def window_centroid_field(xi_w_rows, window):
    """Vectorized ``q_w`` for an ``(N, 3)`` array of window-relative positions."""
    rel = window.corners - window.center
    P = rel[None, :, :] - xi_w_rows[:, None, :]
    n = np.linalg.norm(P, axis=2)
    return -np.mean(P / n[:, :, None], axis=1)


def beta_t(q_t, eta_t):
    """``-eta_t . q_t``; positive while the vehicle is above the pad plane."""
    return -float(np.dot(eta_t, q_t))


# ---------------------------------------------------------------------------
# window lines and frame
# ---------------------------------------------------------------------------


def edge_plane_normals_from_bearings(corner_bearings):
    """``h_i`` = unit normal of the plane through the camera and edge ``i``."""
    p = corner_bearings
    hs = []
    for i in range(4):
        c = cross(p[i], p[(i + 1) % 4])
        try:
            hs.append(normalize(c))
        except DegenerateVector:
            raise DegenerateVector(f"camera lies on the supporting line of edge {i + 1}") from None
    return np.array(hs)


def edge_plane_normals(xi, window):
    P = window.corners - np.asarray(xi, dtype=float)
    hs = []
    for i in range(4):
        c = cross(P[i], P[(i + 1) % 4])
        try:
            hs.append(normalize(c))
        except DegenerateVector:
            raise DegenerateVector(f"camera lies on the supporting line of edge {i + 1}") from None
    return np.array(hs)


def _unit_cross(a, b, what):
    c = cross(a, b)
    n = norm(c)
    if n < FLOOR:
        raise ParallelLines(f"{what}: plane normals are parallel (camera in the window plane?)")
    return c / n


def window_frame_from_lines(h, q_w_initial):
    """Recover ``(u_w, rho_w, eta_w)`` from the four edge-plane normals.

    Opposite edges are parallel, so ``h_1 x h_3`` gives the common direction
    of edges 1 and 3 and ``h_2 x h_4`` that of edges 2 and 4. The normal
    sign is fixed by ``eta_w . q_w_initial < 0``; ``rho_w`` is then set to
    ``u_w x eta_w``, the same convention as :class:`WindowSpec`.
    """
    rho = _unit_cross(h[0], h[2], "edges 1/3")
    u = _unit_cross(h[1], h[3], "edges 2/4")
    eta = _unit_cross(u, rho, "window normal")
    if float(np.dot(eta, q_w_initial)) > 0.0:
        eta = -eta
    rho = cross(u, eta)
    rho /= norm(rho)
    return u, rho, eta


def closest_edge_direction(h, u_w, rho_w, eta_w, corner_bearings, tie_tol=1e-12):
    """Direction ``l^e`` to the closest edge line and the 0-based edge index.

    Candidates are ``h_i x rho_w`` (edges 1, 3) and ``h_i x u_w`` (edges
    2, 4), signed to point toward edge ``i`` (positive projection on the
    bearing of corner ``i``). The closest line maximizes ``|eta . l_i|``;
    ties within ``tie_tol`` go to the lowest index.
    """
    cands = []
    scores = []
    for i in range(4):
        axis = rho_w if i % 2 == 0 else u_w
        l = normalize(cross(h[i], axis))
        if float(np.dot(l, corner_bearings[i])) < 0.0:
            l = -l
        cands.append(l)
        scores.append(abs(float(np.dot(eta_w, l))))
    best = max(scores)
    for i, s in enumerate(scores):
        if s >= best - tie_tol:
            return cands[i], i
    raise AssertionError("unreachable")


def edge_line_distances(xi, window):
    """Vectors from ``xi`` to the closest point of each (infinite) edge line."""
    W = window.corners - np.asarray(xi, dtype=float)
    D = window.edge_dirs
    return W - D * np.einsum("ij,ij->i", W, D)[:, None]


# ---------------------------------------------------------------------------
# weighted window feature
# ---------------------------------------------------------------------------


def weight_alpha(q_w_norm, eps, delta):
    """Piecewise-linear blend weight: 0 inside the safety region, 1 far outside."""
    if eps <= 0 or delta <= 0:
        raise ValueError("eps and delta must be positive")
    if q_w_norm <= eps:
        return 0.0
    if q_w_norm >= eps + delta:
        return 1.0
    return (q_w_norm - eps) / delta


def weighted_window_centroid(corner_bearings, eta_w, l_e, alpha, floor=PLANE_FLOOR):
    """``qbar_w``; equals ``alpha xi_w/d_o + (1-alpha) xi_w/d_e`` on exact data."""
    c = corner_bearings @ eta_w
    if np.any(np.abs(c) < floor):
        raise WindowPlaneSingularity("a window corner bearing is parallel to the window plane")
    gain = alpha / c + (1.0 - alpha) * float(np.dot(eta_w, l_e)) / c
    return -np.mean(corner_bearings * gain[:, None], axis=0)


# ---------------------------------------------------------------------------
# optical flow
# ---------------------------------------------------------------------------


def translational_flow(v, d, floor=DISTANCE_FLOOR):
    if not d > floor:
        raise DegenerateDistance(f"distance {d:.3e} below floor {floor:.1e}")
    return np.asarray(v, dtype=float) / d


def window_flow(v, d_o, d_e, alpha, floor=DISTANCE_FLOOR):
    v = np.asarray(v, dtype=float)
    if not d_e > floor:
        raise DegenerateDistance(f"edge distance {d_e:.3e} below floor")
    if alpha == 0.0:
        return v / d_e
    if not d_o > floor:
        raise DegenerateDistance(f"wall distance {d_o:.3e} below floor")
    return alpha * v / d_o + (1.0 - alpha) * v / d_e


def cap_flow_gain(cap_half_angle):
    """Diagonal of ``int_cap cos(theta) (I - p p^T) dp`` in a frame with z = cap axis.

    Closed-form; this is the calibration matrix that maps the integrated
    image-point velocity back to ``v / d``.
    """
    s2 = math.sin(cap_half_angle) ** 2
    c4 = math.cos(cap_half_angle) ** 4
    lateral = math.pi * s2 - math.pi * s2 * s2 / 4.0
    axial = math.pi * s2 - 0.5 * math.pi * (1.0 - c4)
    return np.array([lateral, lateral, axial])


def _frame_with_axis(eta):
    """Rotation whose third column is ``eta``."""
    eta = normalize(eta)
    helper = np.array([1.0, 0.0, 0.0]) if abs(eta[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    a = normalize(cross(helper, eta))
    b = cross(eta, a)
    return np.column_stack([a, b, eta])


def sample_cap(eta, cap_half_angle, n, rng):
    """Uniform samples on the spherical cap of half-angle ``cap_half_angle`` around ``eta``."""
    cos_c = math.cos(cap_half_angle)
    z = rng.uniform(cos_c, 1.0, size=n)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    local = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return local @ _frame_with_axis(eta).T


def flow_from_sphere_samples(xi, v, normal, offset, cap_half_angle, n_samples, rng):
    """Monte-Carlo estimate of ``v / d`` from image-point velocities on a cap.

    The textured plane is ``{x : normal . x = offset}`` and the camera at
    ``xi`` must be on its negative side (``d = offset - normal . xi > 0``).
    Each sampled ray hits the plane at range ``d / cos(theta)`` and its
    image point moves with ``p_dot = -pi_p v / range``; the cap integral is
    estimated by the sample mean times the cap area, then unmixed with the
    closed-form calibration from :func:`cap_flow_gain`.
    """
    xi = np.asarray(xi, dtype=float)
    v = np.asarray(v, dtype=float)
    eta = normalize(normal)
    d = float(offset) - float(eta @ xi)
    if not d > DISTANCE_FLOOR:
        raise CapOutsidePlane("camera is not in front of the textured plane")
    if not 0.0 < cap_half_angle < math.pi / 2:
        raise CapOutsidePlane("cap rays must all intersect the plane (half-angle < 90 deg)")
    p = sample_cap(eta, cap_half_angle, int(n_samples), rng)
    cos_t = p @ eta
    if np.any(cos_t <= 0.0):
        raise CapOutsidePlane("sampled ray misses the plane")
    rng_to_plane = d / cos_t
    # p_dot = -(v - p (p.v)) / range
    pv = p @ v
    p_dot = -(v[None, :] - p * pv[:, None]) / rng_to_plane[:, None]
    area = 2.0 * math.pi * (1.0 - math.cos(cap_half_angle))
    integral = area * p_dot.mean(axis=0)
    F = _frame_with_axis(eta)
    gain = cap_flow_gain(cap_half_angle)
    return -(F @ ((F.T @ integral) / gain))


# ---------------------------------------------------------------------------
# distances and safety region
# ---------------------------------------------------------------------------


def distances(xi, scene):
    """Return ``(d_t, d_o, d_e)``; ``nan`` for targets absent from the scene."""
    xi = np.asarray(xi, dtype=float)
    d_t = d_o = d_e = math.nan
    if scene.pad is not None:
        d_t = -float(scene.pad.normal @ (xi - scene.pad.center))
    if scene.window is not None:
        w = scene.window
        d_o = -float(w.normal @ (xi - w.center))
        L = edge_line_distances(xi, w)
        d_e = math.sqrt(float(np.min(np.einsum("ij,ij->i", L, L))))
    return d_t, d_o, d_e


def fibonacci_hemisphere(n, axis):
    """``n`` near-uniform unit vectors with ``axis . p >= 0``."""
    k = np.arange(n) + 0.5
    z = k / n
    phi = math.pi * (1.0 + 5.0**0.5) * k
    r = np.sqrt(1.0 - z * z)
    local = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return local @ _frame_with_axis(axis).T


def safety_region_extent(window, eps, n_dirs=600, tol=1e-7):
    """Largest ``|xi_w|`` on the level set ``|q_w| = eps`` on the approach side.

    Rays leave the window center (where ``q_w = 0``) over the hemisphere
    facing the approach side; along each ray the crossing of ``eps`` is
    found by bisection.
    """
    dirs = fibonacci_hemisphere(n_dirs, -window.normal)
    lo = np.zeros(n_dirs)
    hi = np.full(n_dirs, 10.0 * max(window.width, window.height))
    qn = np.linalg.norm(window_centroid_field(dirs * hi[:, None], window), axis=1)
    if np.any(qn < eps):
        raise ValueError("eps too large: level set not bounded")
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        qn = np.linalg.norm(window_centroid_field(dirs * mid[:, None], window), axis=1)
        inside = qn <= eps
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return float(np.max(lo))


def validate_safety_region(window, eps, n_dirs=600):
    """Return ``(ok, extent, bound)`` for the rule ``|xi_w| < r_w/2 - eps`` on W."""
    extent = safety_region_extent(window, eps, n_dirs)
    bound = 0.5 * window.r_w - eps
    return extent < bound, extent, bound


# ---------------------------------------------------------------------------
# snapshot
# ---------------------------------------------------------------------------


def _perturb_bearings(b, sigma, rng):
    if sigma == 0.0:
        return b
    out = np.empty_like(b)
    for i in range(b.shape[0]):
        p = b[i]
        axis = cross(p, rng.standard_normal(3))
        n = norm(axis)
        angle = rng.normal(0.0, sigma)
        if n < FLOOR:
            out[i] = p
            continue
        axis = axis / n
        out[i] = p * math.cos(angle) + cross(axis, p) * math.sin(angle)
    return out


def _noisy_flow(phi, sigma, rng):
    if sigma == 0.0:
        return phi
    return phi * (1.0 + sigma * rng.standard_normal(3))


def snapshot(state, scene, noise=None, rng=None, q_w_ref=None, eps=0.18, delta=0.05):
    """Synthesize every feature for the current state.

    ``q_w_ref`` is the window centroid captured when the window was first
    seen; it fixes the sign of the recovered window normal. When omitted the
    current centroid is used.
    """
    noise = noise or FeatureNoise()
    if not noise.is_zero and rng is None:
        raise ValueError("a random generator is required when noise is enabled")
    xi, R, v = state.xi, state.R, state.v
    snap = FeatureSnapshot()
    snap.d_t, snap.d_o, snap.d_e = distances(xi, scene)

    if scene.pad is not None:
        pad = scene.pad
        b = bearings(pad.markers, xi)
        snap.q_t_true = centroid(b)
        cam = scene.down_camera
        bc = to_camera(b, R, cam.mount)
        occluded = scene.window is not None and snap.d_o > 0.0
        in_view = scene.ideal_cameras or cam.sees(bc)
        if snap.d_t > DISTANCE_FLOOR and not occluded and in_view:
            snap.pad_visible = True
            if noise.bearing_sigma > 0.0:
                b = derotate(_perturb_bearings(bc, noise.bearing_sigma, rng), R, cam.mount)
            snap.q_t = centroid(b)
            snap.phi_t = _noisy_flow(translational_flow(v, snap.d_t), noise.flow_relative_sigma, rng)

    if scene.window is not None:
        w = scene.window
        b = bearings(w.corners, xi)
        snap.q_w_true = centroid(b)
        cam = scene.forward_camera
        bc = to_camera(b, R, cam.mount)
        if scene.ideal_cameras:
            # ideal cameras keep reporting behind the wall so the sigma gate is exercised
            usable = abs(snap.d_o) > DISTANCE_FLOOR
        else:
            usable = snap.d_o > DISTANCE_FLOOR and cam.sees(bc)
        if usable:
            try:
                if noise.bearing_sigma > 0.0:
                    b = derotate(_perturb_bearings(bc, noise.bearing_sigma, rng), R, cam.mount)
                q_w = centroid(b)
                h = edge_plane_normals_from_bearings(b)
                u, rho, eta = window_frame_from_lines(h, q_w if q_w_ref is None else q_w_ref)
                l_e, idx = closest_edge_direction(h, u, rho, eta, b)
                alpha = weight_alpha(norm(q_w), eps, delta)
                snap.window_visible = True
                snap.window_bearings = b
                snap.q_w = q_w
                snap.eta_w = eta
                snap.l_e = l_e
                snap.edge_index = idx
                snap.alpha_w = alpha
                snap.qbar_w = weighted_window_centroid(b, eta, l_e, alpha)
                if snap.d_o > 0.0 or alpha == 0.0:
                    phi = window_flow(v, max(snap.d_o, DISTANCE_FLOOR * 2), snap.d_e, alpha)
                else:
                    phi = np.zeros(3)
                snap.phi_w = _noisy_flow(phi, noise.flow_relative_sigma, rng)
            except (DegenerateVector, DegenerateDistance, ParallelLines, WindowPlaneSingularity):
                # the line-based window detector fails in degenerate views; report no fix
                for name in ("window_bearings", "q_w", "eta_w", "l_e", "edge_index", "alpha_w", "qbar_w", "phi_w"):
                    setattr(snap, name, None)
                snap.window_visible = False
    return snap
