"""
Fixed-step closed-loop simulation and scenario files.

One step: synthesize features, advance the mission supervisor, turn the
force command into thrust and a desired attitude, compute the torque, log
the record, then integrate the rigid body with RK4 (inputs held constant
over the step).
"""

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis
from .control import AttitudeGains, LandingGains, WindowGains, attitude_setpoint, attitude_torque
from .dynamics import (
    DISTURBANCE_KINDS,
    DisturbanceModel,
    VehicleParams,
    VehicleState,
    Wrench,
    disturbance_at,
)
from .errors import MissionAbort, ParseError, ScenarioInvalid, YawSingularity, ZeroForce
from .geometry import (
    E3,
    expm_so3,
    euler_zyx_to_rot,
    reorthonormalize,
    rot_to_euler_zyx,
)
from .mission import (
    MISSION_KINDS,
    ControllerConfig,
    MissionConfig,
    MissionContext,
    Mode,
    initial_mission_state,
    mission_step,
)
from .perception import (
    FORWARD_MOUNT,
    CameraModel,
    FeatureNoise,
    LandingPad,
    SceneGeometry,
    WindowSpec,
    distances,
    snapshot,
    validate_safety_region,
)
from .trajectory import COLUMNS, INDEX, TrajectoryLog

DT_MAX = 0.02
ATTITUDE_MODES = ("geometric", "ideal")

# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------


@dataclass
class InitialCondition:
    position: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    euler_zyx: np.ndarray = field(default_factory=lambda: np.zeros(3))
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        for name in ("position", "velocity", "euler_zyx", "omega"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))

    def state(self):
        roll, pitch, yaw = self.euler_zyx
        return VehicleState(
            self.position.copy(),
            self.velocity.copy(),
            euler_zyx_to_rot(roll, pitch, yaw),
            self.omega.copy(),
        )


@dataclass
class SimOptions:
    thrust_clamp: Optional[float] = None
    control_decimation: int = 1
    attitude_mode: str = "geometric"
    # window-only runs stop this long after the wall plane is crossed
    post_crossing_time: float = 0.5
    reorthonormalize_every: int = 1000

    def __post_init__(self):
        if self.attitude_mode not in ATTITUDE_MODES:
            raise ValueError(f"attitude_mode must be one of {ATTITUDE_MODES}")
        if self.control_decimation < 1 or self.reorthonormalize_every < 1:
            raise ValueError("control_decimation and reorthonormalize_every must be >= 1")
        if self.thrust_clamp is not None and self.thrust_clamp <= 0:
            raise ValueError("thrust_clamp must be positive")


@dataclass
class Scenario:
    scene: SceneGeometry
    initial: InitialCondition
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    gains: ControllerConfig = field(default_factory=ControllerConfig)
    disturbance: DisturbanceModel = field(default_factory=DisturbanceModel)
    noise: FeatureNoise = field(default_factory=FeatureNoise)
    dt: float = 1e-3
    duration: float = 30.0
    seed: int = 0
    options: SimOptions = field(default_factory=SimOptions)


def validate_scenario(s):
    """Raise :class:`ScenarioInvalid` naming the first violated constraint."""
    if not (0.0 < s.dt <= DT_MAX):
        raise ScenarioInvalid(f"sim.dt must lie in (0, {DT_MAX}] (got {s.dt})")
    if not s.duration >= 0.0:
        raise ScenarioInvalid(f"sim.duration must be non-negative (got {s.duration})")
    kind = s.gains.mission.kind
    if kind in ("full", "window") and s.scene.window is None:
        raise ScenarioInvalid(f"mission '{kind}' needs scene.window")
    if kind in ("full", "landing") and s.scene.pad is None:
        raise ScenarioInvalid(f"mission '{kind}' needs scene.pad")
    d_t, d_o, _ = distances(s.initial.position, s.scene)
    if s.scene.window is not None and not d_o > 0.0:
        raise ScenarioInvalid(f"initial d_o(0) > 0 violated (d_o = {d_o:.4g} m)")
    if s.scene.pad is not None and not d_t > 0.0:
        raise ScenarioInvalid(f"initial d_t(0) > 0 violated (d_t = {d_t:.4g} m)")
    if s.scene.window is not None:
        eps = s.gains.window.eps
        ok, extent, bound = validate_safety_region(s.scene.window, eps)
        if not ok:
            raise ScenarioInvalid(
                f"safety region |xi_w| < r_w/2 - eps violated: extent {extent:.4g} m >= {bound:.4g} m"
                f" (eps = {eps})"
            )


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------


def _key_line(text, key):
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return None if m is None else text.count("\n", 0, m.start()) + 1


class _Reader:
    """Pull typed values out of nested dicts, tracking dotted key paths."""

    def __init__(self, text):
        self.text = text

    def fail(self, msg, path):
        leaf = path.rsplit(".", 1)[-1]
        raise ParseError(msg, key=path, line=_key_line(self.text, leaf))

    def section(self, d, name, path, required=True):
        full = f"{path}.{name}" if path else name
        if name not in d:
            if required:
                raise ParseError(f"missing required key '{full}'", key=full)
            return None
        v = d[name]
        if not isinstance(v, dict):
            self.fail("expected an object", full)
        return v

    def get(self, d, name, path, conv, default=None, required=False):
        full = f"{path}.{name}"
        if name not in d:
            if required:
                raise ParseError(f"missing required key '{full}'", key=full)
            return default
        try:
            return conv(d[name])
        except (TypeError, ValueError) as exc:
            self.fail(f"bad value for '{full}': {exc}", full)

    def no_extra(self, d, allowed, path):
        extra = sorted(set(d) - set(allowed))
        if extra:
            full = f"{path}.{extra[0]}" if path else extra[0]
            self.fail(f"unknown key '{full}'", full)


def _num(x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ValueError(f"expected a number, got {x!r}")
    v = float(x)
    if not math.isfinite(v):
        raise ValueError("value must be finite")
    return v


def _opt_num(x):
    return None if x is None else _num(x)


def _int(x):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValueError(f"expected an integer, got {x!r}")
    return x


def _bool(x):
    if not isinstance(x, bool):
        raise ValueError(f"expected true/false, got {x!r}")
    return x


def _str(x):
    if not isinstance(x, str):
        raise ValueError(f"expected a string, got {x!r}")
    return x


def _vec3(x):
    a = np.array([_num(c) for c in x])
    if a.shape != (3,):
        raise ValueError("expected a 3-vector")
    return a


def _mat3(x):
    a = np.array([[_num(c) for c in row] for row in x])
    if a.shape != (3, 3):
        raise ValueError("expected a 3x3 matrix")
    return a


def _points(x):
    a = np.array([[_num(c) for c in row] for row in x])
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError("expected a list of 3-vectors")
    return a


def _build(reader, path, ctor, *args, **kwargs):
    try:
        return ctor(*args, **kwargs)
    except ValueError as exc:
        raise ParseError(f"invalid '{path}': {exc}", key=path, line=_key_line(reader.text, path.split(".")[-1])) from None


def scenario_from_dict(d, text=""):
    r = _Reader(text or json.dumps(d, indent=2))
    if not isinstance(d, dict):
        raise ParseError("scenario must be a JSON object", line=1)
    r.no_extra(d, ("scene", "vehicle", "initial", "gains", "disturbance", "noise", "sim"), "")

    # scene
    sc = r.section(d, "scene", "")
    r.no_extra(sc, ("window", "pad", "cameras"), "scene")
    window = None
    wd = r.section(sc, "window", "scene", required=False)
    if wd is not None:
        p = "scene.window"
        r.no_extra(wd, ("center", "normal", "u_axis", "width", "height"), p)
        window = _build(
            r,
            p,
            WindowSpec,
            r.get(wd, "center", p, _vec3, required=True),
            r.get(wd, "normal", p, _vec3, required=True),
            r.get(wd, "u_axis", p, _vec3, required=True),
            r.get(wd, "width", p, _num, required=True),
            r.get(wd, "height", p, _num, required=True),
        )
    pad = None
    pd = r.section(sc, "pad", "scene", required=False)
    if pd is not None:
        p = "scene.pad"
        r.no_extra(pd, ("markers", "normal"), p)
        pad = _build(
            r,
            p,
            LandingPad,
            r.get(pd, "markers", p, _points, required=True),
            r.get(pd, "normal", p, _vec3, E3.copy()),
        )
    cd = r.section(sc, "cameras", "scene", required=False) or {}
    p = "scene.cameras"
    r.no_extra(cd, ("down_fov", "forward_fov", "down_mount", "forward_mount", "ideal"), p)
    down = _build(
        r,
        p + ".down_fov",
        CameraModel,
        r.get(cd, "down_mount", p, _mat3, np.eye(3)),
        r.get(cd, "down_fov", p, _num, math.radians(60.0)),
    )
    fwd = _build(
        r,
        p + ".forward_fov",
        CameraModel,
        r.get(cd, "forward_mount", p, _mat3, FORWARD_MOUNT.copy()),
        r.get(cd, "forward_fov", p, _num, math.radians(60.0)),
    )
    scene = SceneGeometry(window, pad, down, fwd, r.get(cd, "ideal", p, _bool, False))

    # vehicle
    vd = r.section(d, "vehicle", "")
    p = "vehicle"
    r.no_extra(vd, ("mass", "inertia", "gravity"), p)
    vehicle = _build(
        r,
        p,
        VehicleParams,
        r.get(vd, "mass", p, _num, required=True),
        r.get(vd, "inertia", p, _mat3, np.diag([0.01, 0.01, 0.02])),
        r.get(vd, "gravity", p, _num, 9.81),
    )

    # initial condition
    idd = r.section(d, "initial", "")
    p = "initial"
    r.no_extra(idd, ("position", "velocity", "euler_zyx", "omega"), p)
    initial = InitialCondition(
        r.get(idd, "position", p, _vec3, required=True),
        r.get(idd, "velocity", p, _vec3, np.zeros(3)),
        r.get(idd, "euler_zyx", p, _vec3, np.zeros(3)),
        r.get(idd, "omega", p, _vec3, np.zeros(3)),
    )

    # gains
    gd = r.section(d, "gains", "", required=False) or {}
    r.no_extra(gd, ("landing", "window", "attitude", "mission"), "gains")

    def _gain_block(name, cls, keys, conv=_num):
        block = r.section(gd, name, "gains", required=False) or {}
        p = f"gains.{name}"
        r.no_extra(block, keys, p)
        kw = {}
        for k in keys:
            c = conv[k] if isinstance(conv, dict) else conv
            if k in block:
                kw[k] = r.get(block, k, p, c)
        return _build(r, p, cls, **kw)

    landing = _gain_block("landing", LandingGains, ("kp12", "kp3", "kd12", "kd3", "phi_star"))
    wgains = _gain_block("window", WindowGains, ("kp", "kd", "kphi", "phi_star", "eps", "delta"))
    att = _gain_block("attitude", AttitudeGains, ("k_R", "k_omega"))
    mkeys = (
        "kind",
        "mode2_literal",
        "q_lateral_max",
        "beta_touch",
        "hold_time",
        "ramp_time",
        "grace_time",
        "jump_threshold",
    )
    mconv = {k: _num for k in mkeys}
    mconv["kind"] = _str
    mconv["mode2_literal"] = _bool
    mission = _gain_block("mission", MissionConfig, mkeys, mconv)
    gains = ControllerConfig(landing, wgains, att, mission)

    # disturbance
    dd = r.section(d, "disturbance", "", required=False) or {}
    p = "disturbance"
    r.no_extra(dd, ("kind", "amplitude", "frequency", "phase", "horizontal_reference"), p)
    kind = r.get(dd, "kind", p, _str, "zero")
    if kind not in DISTURBANCE_KINDS:
        r.fail(f"bad value for 'disturbance.kind': must be one of {DISTURBANCE_KINDS}", "disturbance.kind")
    dist = _build(
        r,
        p,
        DisturbanceModel,
        kind,
        r.get(dd, "amplitude", p, _vec3, np.zeros(3)),
        r.get(dd, "frequency", p, _num, 0.0),
        r.get(dd, "phase", p, _num, 0.0),
        r.get(dd, "horizontal_reference", p, _vec3, E3.copy()),
    )

    # noise and sim
    nd = r.section(d, "noise", "", required=False) or {}
    p = "noise"
    r.no_extra(nd, ("bearing_sigma", "flow_relative_sigma"), p)
    sd = r.section(d, "sim", "")
    ps = "sim"
    r.no_extra(
        sd,
        (
            "dt",
            "duration",
            "seed",
            "thrust_clamp",
            "control_decimation",
            "attitude_mode",
            "post_crossing_time",
            "reorthonormalize_every",
        ),
        ps,
    )
    seed = r.get(sd, "seed", ps, _int, 0)
    noise = _build(
        r,
        p,
        FeatureNoise,
        r.get(nd, "bearing_sigma", p, _num, 0.0),
        r.get(nd, "flow_relative_sigma", p, _num, 0.0),
        seed,
    )
    options = _build(
        r,
        ps,
        SimOptions,
        r.get(sd, "thrust_clamp", ps, _opt_num, None),
        r.get(sd, "control_decimation", ps, _int, 1),
        r.get(sd, "attitude_mode", ps, _str, "geometric"),
        r.get(sd, "post_crossing_time", ps, _num, 0.5),
        r.get(sd, "reorthonormalize_every", ps, _int, 1000),
    )
    s = Scenario(
        scene=scene,
        initial=initial,
        vehicle=vehicle,
        gains=gains,
        disturbance=dist,
        noise=noise,
        dt=r.get(sd, "dt", ps, _num, required=True),
        duration=r.get(sd, "duration", ps, _num, required=True),
        seed=seed,
        options=options,
    )
    validate_scenario(s)
    return s


def read_scenario(path):
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    return scenario_from_dict(d, text)


def _l(a):
    return np.asarray(a, dtype=float).tolist()


def scenario_to_dict(s):
    sc = s.scene
    scene = {
        "cameras": {
            "down_fov": sc.down_camera.fov_half_angle,
            "forward_fov": sc.forward_camera.fov_half_angle,
            "down_mount": _l(sc.down_camera.mount),
            "forward_mount": _l(sc.forward_camera.mount),
            "ideal": sc.ideal_cameras,
        }
    }
    if sc.window is not None:
        w = sc.window
        scene["window"] = {
            "center": _l(w.center),
            "normal": _l(w.normal),
            "u_axis": _l(w.u_axis),
            "width": w.width,
            "height": w.height,
        }
    if sc.pad is not None:
        scene["pad"] = {"markers": _l(sc.pad.markers), "normal": _l(sc.pad.normal)}
    g = s.gains
    lg, wg, ag, mc = g.landing, g.window, g.attitude, g.mission
    return {
        "scene": scene,
        "vehicle": {
            "mass": s.vehicle.mass,
            "inertia": _l(s.vehicle.inertia),
            "gravity": s.vehicle.gravity,
        },
        "initial": {
            "position": _l(s.initial.position),
            "velocity": _l(s.initial.velocity),
            "euler_zyx": _l(s.initial.euler_zyx),
            "omega": _l(s.initial.omega),
        },
        "gains": {
            "landing": {"kp12": lg.kp12, "kp3": lg.kp3, "kd12": lg.kd12, "kd3": lg.kd3, "phi_star": lg.phi_star},
            "window": {
                "kp": wg.kp,
                "kd": wg.kd,
                "kphi": wg.kphi,
                "phi_star": wg.phi_star,
                "eps": wg.eps,
                "delta": wg.delta,
            },
            "attitude": {"k_R": ag.k_R, "k_omega": ag.k_omega},
            "mission": {
                "kind": mc.kind,
                "mode2_literal": mc.mode2_literal,
                "q_lateral_max": mc.q_lateral_max,
                "beta_touch": mc.beta_touch,
                "hold_time": mc.hold_time,
                "ramp_time": mc.ramp_time,
                "grace_time": mc.grace_time,
                "jump_threshold": mc.jump_threshold,
            },
        },
        "disturbance": {
            "kind": s.disturbance.kind,
            "amplitude": _l(s.disturbance.amplitude),
            "frequency": s.disturbance.frequency,
            "phase": s.disturbance.phase,
            "horizontal_reference": _l(s.disturbance.horizontal_reference),
        },
        "noise": {
            "bearing_sigma": s.noise.bearing_sigma,
            "flow_relative_sigma": s.noise.flow_relative_sigma,
        },
        "sim": {
            "dt": s.dt,
            "duration": s.duration,
            "seed": s.seed,
            "thrust_clamp": s.options.thrust_clamp,
            "control_decimation": s.options.control_decimation,
            "attitude_mode": s.options.attitude_mode,
            "post_crossing_time": s.options.post_crossing_time,
            "reorthonormalize_every": s.options.reorthonormalize_every,
        },
    }


def _compact_lists(text):
    # put innermost numeric lists on one line
    pat = re.compile(r"\[\s*([-+0-9.eE]+(?:,\s*[-+0-9.eE]+)*)\s*\]")
    return pat.sub(lambda m: "[" + ", ".join(x.strip() for x in m.group(1).split(",")) + "]", text)


def write_scenario(s, path):
    Path(path).write_text(_compact_lists(json.dumps(scenario_to_dict(s), indent=2)) + "\n")


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def _expm_e3(x, y, z):
    """Third column of ``expm(skew((x, y, z)))``."""
    t2 = x * x + y * y + z * z
    if t2 < 1e-16:
        a, b = 1.0, 0.5
    else:
        th = math.sqrt(t2)
        a = math.sin(th) / th
        b = (1.0 - math.cos(th)) / t2
    return (b * x * z + a * y, b * y * z - a * x, 1.0 - b * (x * x + y * y))


def rk4_step(state, wrench, delta, params, dt):
    """Classical RK4 on ``(xi, v, Omega)``; ``R`` follows the stage rates on SO(3).

    Stage attitudes are ``R0 expm(c dt Omega_prev)`` and the final attitude
    uses the RK4-weighted mean rate. Wrench and ``delta`` are held over the step.
    Only the thrust axis ``R e3`` of the stage attitudes enters the
    translational dynamics, so stages carry that column alone.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    # scalar arithmetic: this runs once per step and dominates the loop cost
    m = params.mass
    T = float(wrench.thrust)
    tx, ty, tz = (float(c) for c in wrench.torque)
    I = params.inertia.tolist()
    J = params.inertia_inv.tolist()
    dx, dy, dz = (float(c) for c in delta)
    gx, gy, gz = dx / m, dy / m, (params.weight + dz) / m
    c = T / m
    R0 = state.R
    Rl = R0.tolist()
    v0 = state.v.tolist()
    w0 = state.omega.tolist()

    def acc(col):
        # R0 @ col gives the stage thrust axis
        bx = Rl[0][0] * col[0] + Rl[0][1] * col[1] + Rl[0][2] * col[2]
        by = Rl[1][0] * col[0] + Rl[1][1] * col[1] + Rl[1][2] * col[2]
        bz = Rl[2][0] * col[0] + Rl[2][1] * col[1] + Rl[2][2] * col[2]
        return (gx - c * bx, gy - c * by, gz - c * bz)

    def wdot(w):
        p, q, r = w
        a = I[0][0] * p + I[0][1] * q + I[0][2] * r
        b = I[1][0] * p + I[1][1] * q + I[1][2] * r
        e = I[2][0] * p + I[2][1] * q + I[2][2] * r
        u0 = tx - (q * e - r * b)
        u1 = ty - (r * a - p * e)
        u2 = tz - (p * b - q * a)
        return (
            J[0][0] * u0 + J[0][1] * u1 + J[0][2] * u2,
            J[1][0] * u0 + J[1][1] * u1 + J[1][2] * u2,
            J[2][0] * u0 + J[2][1] * u1 + J[2][2] * u2,
        )

    def ax(u, h, k):
        return (u[0] + h * k[0], u[1] + h * k[1], u[2] + h * k[2])

    h = 0.5 * dt
    k1v, k1w = acc((0.0, 0.0, 1.0)), wdot(w0)
    w2 = ax(w0, h, k1w)
    v2 = ax(v0, h, k1v)
    k2v, k2w = acc(_expm_e3(h * w0[0], h * w0[1], h * w0[2])), wdot(w2)
    w3 = ax(w0, h, k2w)
    v3 = ax(v0, h, k2v)
    k3v, k3w = acc(_expm_e3(h * w2[0], h * w2[1], h * w2[2])), wdot(w3)
    w4 = ax(w0, dt, k3w)
    v4 = ax(v0, dt, k3v)
    k4v, k4w = acc(_expm_e3(dt * w3[0], dt * w3[1], dt * w3[2])), wdot(w4)

    s6 = dt / 6.0
    xi = state.xi + s6 * np.array([v0[i] + 2.0 * v2[i] + 2.0 * v3[i] + v4[i] for i in range(3)])
    v = np.array([v0[i] + s6 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]) for i in range(3)])
    w = np.array([w0[i] + s6 * (k1w[i] + 2.0 * k2w[i] + 2.0 * k3w[i] + k4w[i]) for i in range(3)])
    w_mean = np.array([w0[i] + 2.0 * w2[i] + 2.0 * w3[i] + w4[i] for i in range(3)]) / 6.0
    R = R0 @ expm_so3(dt * w_mean)
    return VehicleState(xi, v, R, w)


# ---------------------------------------------------------------------------
# closed loop
# ---------------------------------------------------------------------------


def _inside_opening(x, window):
    rel = x - window.center
    return (
        abs(float(rel @ window.u_axis)) <= 0.5 * window.width
        and abs(float(rel @ window.rho_axis)) <= 0.5 * window.height
    )


def _put(row, name, vec):
    i = INDEX[name + "_x"]
    row[i : i + 3] = vec


def run_scenario(s, check=True):
    """Simulate a scenario; returns a :class:`TrajectoryLog`.

    Runs stop at ``duration``, when the shutdown ramp has finished or the
    vehicle touches the pad plane, on a collision, on ``MissionAbort``, and
    (window-only missions) shortly after the wall plane is crossed. Stop
    reasons and event times are stored in ``log.events``.
    """
    if check:
        validate_scenario(s)
    scene, params, cfg, opt = s.scene, s.vehicle, s.gains, s.options
    dt = s.dt
    n_max = int(math.floor(s.duration / dt + 1e-9)) + 1
    data = np.zeros((n_max, len(COLUMNS)))
    rng = np.random.default_rng(s.seed)
    eta_t = scene.pad.normal if scene.pad is not None else E3
    ctx = MissionContext(params.mass, params.gravity, eta_t, scene.forward_camera.boresight_body())

    state = s.initial.state()
    yaw0 = rot_to_euler_zyx(state.R)[2]
    ms = initial_mission_state(cfg, 0.0, yaw0)
    events, notes = {}, []
    R_d = state.R.copy()
    FT = 0.0
    F = np.zeros(3)
    torque = np.zeros(3)
    snap = None
    stop = None
    window = scene.window
    prev_d_o = distances(state.xi, scene)[1]
    if scene.pad is not None:
        pad_n, pad_c = scene.pad.normal, scene.pad.center

    n = 0
    for k in range(n_max):
        t = k * dt
        snap = snapshot(
            state,
            scene,
            s.noise,
            rng,
            q_w_ref=ms.q_w_ref,
            eps=cfg.window.eps,
            delta=cfg.window.delta,
        )
        if k % opt.control_decimation == 0:
            try:
                ms, cmd = mission_step(ms, snap, cfg, t, ctx)
            except MissionAbort as exc:
                events["abort"] = t
                notes.append(f"abort: {exc}")
                stop = "abort"
                cmd = None
            if cmd is not None:
                F = cmd.F
                try:
                    FT, R_d = attitude_setpoint(F, cmd.yaw_d)
                except ZeroForce:
                    FT = 0.0
                except YawSingularity:
                    FT = float(np.linalg.norm(F))
            if opt.thrust_clamp is not None:
                FT = min(FT, opt.thrust_clamp)
        if opt.attitude_mode == "ideal":
            state = VehicleState(state.xi, state.v, R_d.copy(), np.zeros(3))
            torque = np.zeros(3)
        else:
            torque = attitude_torque(state, R_d, cfg.attitude, params.inertia)

        row = data[k]
        row[0] = t
        row[1] = int(ms.mode)
        _put(row, "xi", state.xi)
        _put(row, "v", state.v)
        row[INDEX["roll"] : INDEX["roll"] + 3] = rot_to_euler_zyx(state.R)
        _put(row, "omega", state.omega)
        _put(row, "F", F)
        row[INDEX["F_T"]] = FT
        _put(row, "Gamma", torque)
        if snap.q_t_true is not None:
            _put(row, "q_t", snap.q_t_true)
        if snap.q_w_true is not None:
            _put(row, "q_w", snap.q_w_true)
        if snap.window_visible:
            _put(row, "qbar_w", snap.qbar_w)
            row[INDEX["alpha_w"]] = snap.alpha_w
            _put(row, "phi_w", snap.phi_w)
            _put(row, "eta_w", snap.eta_w)
        elif ms.eta_hold is not None:
            _put(row, "eta_w", ms.eta_hold)
        if snap.pad_visible:
            _put(row, "phi_t", snap.phi_t)
        row[INDEX["d_t"]] = 0.0 if math.isnan(snap.d_t) else snap.d_t
        row[INDEX["d_o"]] = 0.0 if math.isnan(snap.d_o) else snap.d_o
        row[INDEX["d_e"]] = 0.0 if math.isnan(snap.d_e) else snap.d_e
        n = k + 1

        if stop is not None or k == n_max - 1:
            break
        if ms.mode == Mode.SHUTDOWN:
            t4 = ms.event_time("T4")
            if t - t4 >= cfg.mission.ramp_time - 1e-12:
                events["ramp_complete"] = t
                stop = "ramp_complete"
                break

        delta = disturbance_at(s.disturbance, t)
        state = rk4_step(state, Wrench(FT, torque), delta, params, dt)
        if (k + 1) % opt.reorthonormalize_every == 0:
            state.R = reorthonormalize(state.R)

        d_t = -float(pad_n @ (state.xi - pad_c)) if scene.pad is not None else math.nan
        d_o = -float(window.normal @ (state.xi - window.center)) if window is not None else math.nan
        if window is not None and prev_d_o > 0.0 >= d_o:
            frac = prev_d_o / (prev_d_o - d_o)
            x_cross = row[INDEX["xi_x"] : INDEX["xi_x"] + 3] + frac * (state.xi - row[INDEX["xi_x"] : INDEX["xi_x"] + 3])
            if _inside_opening(x_cross, window):
                events.setdefault("crossing", t + frac * dt)
            else:
                events["wall_collision"] = t + frac * dt
                stop = "wall_collision"
        prev_d_o = d_o
        if scene.pad is not None and d_t <= 0.0 and stop is None:
            stop = "touchdown" if ms.mode == Mode.SHUTDOWN else "ground_collision"
            events[stop] = t + dt
        if (
            stop is None
            and cfg.mission.kind == "window"
            and "crossing" in events
            and t + dt >= events["crossing"] + opt.post_crossing_time
        ):
            stop = "window_done"

    for name, te in ms.events:
        events[name] = te
    log = TrajectoryLog(data[:n], events, notes)
    if stop is not None:
        log.notes.append(f"stop: {stop}")
    _fill_storage(log, s)
    return log


def _fill_storage(log, s):
    scene = s.scene
    if scene.pad is not None:
        tr = analysis.lyapunov_landing(log, scene.pad, s.gains.landing, s.vehicle.mass)
        log.data[:, INDEX["L1"]] = tr.values["L1"]
        log.data[:, INDEX["L2"]] = tr.values["L2"]
    if scene.window is not None:
        tr = analysis.lyapunov_window(log, s.gains.window, scene.window)
        log.data[:, INDEX["L3"]] = tr.values["L3"]


def stop_reason(log):
    for note in log.notes:
        if note.startswith("stop: "):
            return note[6:]
    return "duration"
