import math

import numpy as np
import pytest

from ibvsquad.control import WindowGains, window_force
from ibvsquad.errors import MissionAbort
from ibvsquad.geometry import E1, E3, rot_z
from ibvsquad.mission import (
    ControllerConfig,
    MissionConfig,
    MissionContext,
    Mode,
    initial_mission_state,
    memorized_crossing_force,
    mission_step,
    window_loss_detector,
)
from ibvsquad.perception import FORWARD_MOUNT, FeatureSnapshot

M, G = 1.676, 9.81
CTX = MissionContext(M, G, E3, FORWARD_MOUNT[:, 2].copy())
CORNERS = np.array([[1.0, -0.2, -0.2], [1.0, -0.2, 0.2], [1.0, 0.2, 0.2], [1.0, 0.2, -0.2]])
CORNERS /= np.linalg.norm(CORNERS, axis=1)[:, None]


def window_snap(bearings=CORNERS):
    return FeatureSnapshot(
        window_visible=True,
        q_w=-E1 * 0.9,
        qbar_w=np.array([-1.0, 0.1, 0.0]),
        eta_w=E1.copy(),
        phi_w=np.array([0.2, 0.0, 0.0]),
        alpha_w=1.0,
        window_bearings=bearings,
    )


def pad_snap(q=(0.0, 0.0, -0.5), phi=(0.0, 0.0, 0.1)):
    return FeatureSnapshot(pad_visible=True, q_t=np.array(q), phi_t=np.array(phi))


def test_window_loss_detector_examples():
    assert not window_loss_detector(CORNERS, CORNERS, math.radians(5.0))
    jumped = CORNERS.copy()
    jumped[2] = rot_z(math.radians(20.0)) @ jumped[2]
    assert window_loss_detector(CORNERS, jumped, math.radians(5.0))
    prev = CORNERS
    for k in range(1, 101):
        curr = CORNERS @ rot_z(math.radians(0.5 * k)).T
        assert not window_loss_detector(prev, curr, math.radians(5.0))
        prev = curr
    assert not window_loss_detector(None, CORNERS, 0.1)


def test_memorized_force_literal_and_default():
    F_w = np.array([-0.4, 0.1, M * G])
    lit = memorized_crossing_force(F_w, E1, M, G, literal=True)
    assert np.allclose(lit, [0.4, 0.0, 0.0])
    F = memorized_crossing_force(F_w, E1, M, G)
    # rotors produce -F: the default pushes along +eta_w and holds the weight
    assert np.allclose(F, [-0.4, 0.0, M * G])


def test_full_mission_sequence():
    cfg = ControllerConfig()
    ms = initial_mission_state(cfg)
    assert ms.mode == Mode.APPROACH_WINDOW
    ms, cmd = mission_step(ms, window_snap(), cfg, 0.0, CTX)
    assert ms.mode == Mode.APPROACH_WINDOW
    F_w = window_force(window_snap().qbar_w, window_snap().phi_w, window_snap().q_w, E1, cfg.window, M, G)
    assert np.allclose(cmd.F, F_w)

    # window lost: open-loop crossing with the memorized force
    ms, cmd = mission_step(ms, FeatureSnapshot(), cfg, 0.1, CTX)
    assert ms.mode == Mode.CROSS_WINDOW
    assert ms.event_time("T2") == 0.1
    assert np.allclose(cmd.F, memorized_crossing_force(F_w, E1, M, G))

    ms, cmd = mission_step(ms, FeatureSnapshot(), cfg, 0.2, CTX)
    assert ms.mode == Mode.CROSS_WINDOW

    # pad acquired: landing, latched
    ms, cmd = mission_step(ms, pad_snap(), cfg, 0.3, CTX)
    assert ms.mode == Mode.LAND and ms.land_triggered_once
    ms, _ = mission_step(ms, FeatureSnapshot(), cfg, 0.35, CTX)
    assert ms.mode == Mode.LAND
    ms, _ = mission_step(ms, window_snap(), cfg, 0.36, CTX)
    assert ms.mode == Mode.LAND

    # proximity held for hold_time: shutdown ramp
    near = pad_snap(q=(0.001, 0.0, -0.1), phi=(0.0, 0.0, 0.0))
    t = 1.0
    while ms.mode != Mode.SHUTDOWN:
        ms, cmd = mission_step(ms, near, cfg, t, CTX)
        t = round(t + 0.01, 10)
    t4 = ms.event_time("T4")
    assert t4 == pytest.approx(1.0 + cfg.mission.hold_time)
    ft0 = ms.thrust_at_shutdown
    ms, cmd = mission_step(ms, FeatureSnapshot(), cfg, t4 + 0.5, CTX)
    assert np.allclose(cmd.F, 0.5 * ft0 * E3)
    ms, cmd = mission_step(ms, FeatureSnapshot(), cfg, t4 + 2.0, CTX)
    assert np.array_equal(cmd.F, np.zeros(3))
    assert [k for k, _ in ms.events] == ["T1", "T2", "T3", "T4"]


def test_pad_visible_on_window_loss_goes_straight_to_landing():
    cfg = ControllerConfig()
    ms, _ = mission_step(initial_mission_state(cfg), window_snap(), cfg, 0.0, CTX)
    ms, _ = mission_step(ms, pad_snap(), cfg, 0.1, CTX)
    assert ms.mode == Mode.LAND
    assert ms.event_time("T2") == ms.event_time("T3") == 0.1


def test_bearing_jump_counts_as_window_loss():
    cfg = ControllerConfig()
    ms, _ = mission_step(initial_mission_state(cfg), window_snap(), cfg, 0.0, CTX)
    jumped = CORNERS.copy()
    jumped[0] = rot_z(math.radians(30.0)) @ jumped[0]
    ms, _ = mission_step(ms, window_snap(jumped), cfg, 0.001, CTX)
    assert ms.mode == Mode.CROSS_WINDOW


def test_abort_when_window_never_seen():
    cfg = ControllerConfig()
    with pytest.raises(MissionAbort):
        mission_step(initial_mission_state(cfg), FeatureSnapshot(), cfg, 0.0, CTX)


def test_pad_loss_grace_then_abort():
    cfg = ControllerConfig(mission=MissionConfig(kind="landing"))
    ms = initial_mission_state(cfg)
    assert ms.mode == Mode.LAND
    ms, cmd = mission_step(ms, pad_snap(), cfg, 0.0, CTX)
    held = cmd.F
    ms, cmd = mission_step(ms, FeatureSnapshot(), cfg, 0.05, CTX)
    assert np.array_equal(cmd.F, held)
    with pytest.raises(MissionAbort):
        mission_step(ms, FeatureSnapshot(), cfg, 0.5, CTX)


def test_window_kind_gates_off_after_loss():
    cfg = ControllerConfig(window=WindowGains(), mission=MissionConfig(kind="window"))
    ms, _ = mission_step(initial_mission_state(cfg), window_snap(), cfg, 0.0, CTX)
    ms, cmd = mission_step(ms, FeatureSnapshot(), cfg, 0.1, CTX)
    assert ms.mode == Mode.APPROACH_WINDOW
    assert np.array_equal(cmd.F, np.zeros(3))


def test_mission_config_validation():
    with pytest.raises(ValueError):
        MissionConfig(kind="orbit")
    with pytest.raises(ValueError):
        MissionConfig(ramp_time=0.0)
