"""
Ready-made scenarios.

The reference layout: a wall in the plane ``x = -1`` with a 1 m x 1 m
window centered at height 1.82 m, approached from ``x < -1`` (``eta_w = e1``);
behind it a square pad of four markers on the floor at the origin
(``eta_t = e3``, the floor is ``z = 0`` and heights are ``-z``).
"""

import math
from importlib import resources

import numpy as np

from .control import LandingGains, WindowGains
from .dynamics import DisturbanceModel, VehicleParams
from .geometry import E1, E2, E3
from .mission import ControllerConfig, MissionConfig
from .perception import FORWARD_MOUNT, CameraModel, LandingPad, SceneGeometry, WindowSpec
from .simulator import InitialCondition, Scenario, SimOptions, read_scenario

WALL_X = -1.0
WINDOW_CENTER = np.array([WALL_X, 0.0, -1.82])
PAD_HALF_SIZE = 0.1
START = np.array([-2.0, 0.1, -1.82])
# yaw that points the forward camera along +x
FACING_WALL_YAW = 3.0 * math.pi / 4.0

BUNDLED = ("nominal", "window_only", "landing_only", "prop1_horizontal", "prop1_vertical")


def reference_window(width=1.0, height=1.0, center=WINDOW_CENTER):
    return WindowSpec(np.array(center, dtype=float), E1.copy(), E2.copy(), width, height)


def reference_pad(half_size=PAD_HALF_SIZE, center=(0.0, 0.0, 0.0)):
    return LandingPad.square(half_size, center, E3)


def reference_scene(window=True, pad=True, ideal=False, forward_fov=math.radians(60.0)):
    return SceneGeometry(
        reference_window() if window else None,
        reference_pad() if pad else None,
        CameraModel(np.eye(3), math.radians(85.0)),
        CameraModel(FORWARD_MOUNT.copy(), forward_fov),
        ideal,
    )


def nominal_scenario(start=START, duration=30.0, dt=1e-3, seed=0):
    """Full mission with the reference gains: window, crossing, landing, shutdown."""
    return Scenario(
        scene=reference_scene(),
        initial=InitialCondition(np.array(start, dtype=float), euler_zyx=np.array([0.0, 0.0, FACING_WALL_YAW])),
        gains=ControllerConfig(LandingGains(), WindowGains(), mission=MissionConfig(kind="full")),
        dt=dt,
        duration=duration,
        seed=seed,
    )


def window_scenario(start=START, gains=None, duration=20.0, dt=1e-3, seed=0):
    """Window law alone with ideal cameras (no FOV limit) until just past the wall plane."""
    return Scenario(
        scene=reference_scene(pad=False, ideal=True),
        initial=InitialCondition(np.array(start, dtype=float), euler_zyx=np.array([0.0, 0.0, FACING_WALL_YAW])),
        gains=ControllerConfig(window=gains or WindowGains(), mission=MissionConfig(kind="window")),
        dt=dt,
        duration=duration,
        seed=seed,
        options=SimOptions(post_crossing_time=0.2),
    )


def landing_scenario(
    start=(0.5, -0.3, -1.5),
    gains=None,
    disturbance=None,
    duration=30.0,
    dt=1e-3,
    seed=0,
    shutdown=True,
):
    """Obstacle-free landing from ``start`` with ideal cameras.

    ``shutdown=False`` disables the touchdown trigger so the landing law
    runs for the whole horizon.
    """
    mission = MissionConfig(kind="landing")
    if not shutdown:
        mission.beta_touch = 0.0
    return Scenario(
        scene=reference_scene(window=False, ideal=True),
        initial=InitialCondition(np.array(start, dtype=float)),
        gains=ControllerConfig(landing=gains or LandingGains(), mission=mission),
        disturbance=disturbance or DisturbanceModel(),
        dt=dt,
        duration=duration,
        seed=seed,
    )


def prop1_horizontal_scenario():
    """Constant in-plane disturbance of 0.2 m/s^2, landing law with ``phi* = 0``, 40 s."""
    m = VehicleParams().mass
    dist = DisturbanceModel("horizontal_constant", np.array([0.2 * m, 0.0, 0.0]))
    return landing_scenario(start=(0.0, 0.0, -1.5), disturbance=dist, duration=40.0, shutdown=False)


def prop1_vertical_scenario():
    """Disturbance of 0.3 m/s^2 pushing away from the pad, ``phi*`` from the gain rule, 40 s."""
    m = VehicleParams().mass
    gains = LandingGains(phi_star=1.25 * 0.3 / LandingGains().kd3)
    dist = DisturbanceModel("constant", np.array([0.0, 0.0, -0.3 * m]))
    return landing_scenario(start=(0.3, 0.2, -1.5), gains=gains, disturbance=dist, duration=40.0, shutdown=False)


# start positions of the bundled sweep: +-1 m lateral, +-0.5 m vertical, 2 m before the wall
SWEEP_STARTS = (
    (-3.0, 0.0, -1.82),
    (-3.0, 1.0, -1.32),
    (-3.0, -1.0, -2.32),
    (-3.0, 1.0, -2.32),
    (-3.0, -1.0, -1.32),
)

BUILDERS = {
    "nominal": nominal_scenario,
    "window_only": window_scenario,
    "landing_only": landing_scenario,
    "prop1_horizontal": prop1_horizontal_scenario,
    "prop1_vertical": prop1_vertical_scenario,
}


def bundled_path(name):
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled scenario {name!r}; choose from {BUNDLED}")
    return resources.files("ibvsquad") / "scenarios" / f"{name}.json"


def load_bundled(name):
    with resources.as_file(bundled_path(name)) as p:
        return read_scenario(p)
