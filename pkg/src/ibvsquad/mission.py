"""
Four-mode supervisor for the window-crossing and landing mission.

Modes: 1 approach the window (window law), 2 cross it open loop with the
force memorized just before the window left the image, 3 land (landing
law), 4 ramp the motors down. Transitions are monotone and driven by
camera events only.
"""

import dataclasses
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional

import numpy as np

from .control import (
    AttitudeGains,
    ForceCommand,
    LandingGains,
    WindowGains,
    camera_alignment_yaw,
    landing_force,
    window_force,
)
from .errors import MissionAbort
from .geometry import E3, cross_rows, orthogonal_projector

MISSION_KINDS = ("full", "window", "landing")


class Mode(IntEnum):
    APPROACH_WINDOW = 1
    CROSS_WINDOW = 2
    LAND = 3
    SHUTDOWN = 4


@dataclass
class MissionConfig:
    kind: str = "full"
    mode2_literal: bool = False
    # touchdown proximity, from pad features only
    q_lateral_max: float = 0.05
    beta_touch: float = 0.18
    hold_time: float = 0.2
    ramp_time: float = 1.0
    grace_time: float = 0.1
    jump_threshold: float = math.radians(5.0)

    def __post_init__(self):
        if self.kind not in MISSION_KINDS:
            raise ValueError(f"mission kind must be one of {MISSION_KINDS}")
        if self.ramp_time <= 0 or self.hold_time < 0 or self.grace_time < 0:
            raise ValueError("mission timing parameters must be non-negative (ramp_time > 0)")


@dataclass
class ControllerConfig:
    landing: LandingGains = field(default_factory=LandingGains)
    window: WindowGains = field(default_factory=WindowGains)
    attitude: AttitudeGains = field(default_factory=AttitudeGains)
    mission: MissionConfig = field(default_factory=MissionConfig)


@dataclass(frozen=True)
class MissionContext:
    """Plant constants the supervisor needs to build force commands."""

    mass: float
    gravity: float
    eta_t: np.ndarray
    forward_boresight: np.ndarray


@dataclass(frozen=True)
class MissionState:
    mode: Mode = Mode.APPROACH_WINDOW
    F_memo: Optional[np.ndarray] = None
    land_triggered_once: bool = False
    yaw_hold: float = 0.0
    eta_hold: Optional[np.ndarray] = None
    last_force: Optional[np.ndarray] = None
    last_valid_time: float = 0.0
    prev_bearings: Optional[np.ndarray] = None
    q_w_ref: Optional[np.ndarray] = None
    proximity_since: Optional[float] = None
    thrust_at_shutdown: float = 0.0
    events: tuple = ()

    def event_time(self, name):
        for k, t in self.events:
            if k == name:
                return t
        return None


def initial_mission_state(cfg, t0=0.0, yaw0=0.0):
    if cfg.mission.kind == "landing":
        return MissionState(
            mode=Mode.LAND,
            land_triggered_once=True,
            yaw_hold=yaw0,
            last_valid_time=t0,
            events=(("T3", t0),),
        )
    return MissionState(mode=Mode.APPROACH_WINDOW, yaw_hold=yaw0, last_valid_time=t0, events=(("T1", t0),))


def window_loss_detector(prev_bearings, curr_bearings, jump_threshold):
    """True when any corner bearing jumps by more than ``jump_threshold`` between frames."""
    if prev_bearings is None or curr_bearings is None:
        return False
    a = np.asarray(prev_bearings, dtype=float)
    b = np.asarray(curr_bearings, dtype=float)
    c = cross_rows(a, b)
    ang = np.arctan2(np.sqrt(np.einsum("ij,ij->i", c, c)), np.einsum("ij,ij->i", a, b))
    return bool(np.any(ang > jump_threshold))


def memorized_crossing_force(F_w, eta_w, mass, gravity, literal=False):
    """Open-loop mode-2 force.

    The literal rule is ``eta_w |eta_w . F_w|``. Since the rotors produce
    ``-F``, that vector decelerates the vehicle away from the opening. The
    default keeps the memorized magnitude but points it so the vehicle is
    pushed through, and adds back the part of the weight lying in the
    window plane so it does not sink while crossing a vertical opening.
    """
    mag = abs(float(eta_w @ F_w))
    if literal:
        return eta_w * mag
    return -eta_w * mag + orthogonal_projector(eta_w) @ (mass * gravity * E3)


def _with_event(ms, name, t, **changes):
    return dataclasses.replace(ms, events=ms.events + ((name, t),), **changes)


def mission_step(ms, snap, cfg, t, ctx):
    """Advance the supervisor by one control tick; return ``(state, ForceCommand)``."""
    mc = cfg.mission
    if ms.mode == Mode.APPROACH_WINDOW:
        jumped = snap.window_visible and window_loss_detector(
            ms.prev_bearings, snap.window_bearings, mc.jump_threshold
        )
        if snap.window_visible and not jumped:
            q_ref = ms.q_w_ref if ms.q_w_ref is not None else snap.q_w
            F = window_force(
                snap.qbar_w, snap.phi_w, snap.q_w, snap.eta_w, cfg.window, ctx.mass, ctx.gravity
            )
            yaw = camera_alignment_yaw(snap.eta_w, ctx.forward_boresight)
            ms = dataclasses.replace(
                ms,
                last_force=F,
                eta_hold=snap.eta_w,
                prev_bearings=snap.window_bearings,
                q_w_ref=q_ref,
                yaw_hold=yaw,
                last_valid_time=t,
            )
            return ms, ForceCommand(F, yaw)
        if mc.kind == "window":
            # single-law study: once the window is out of sight the law is gated off
            return ms, ForceCommand(np.zeros(3), ms.yaw_hold)
        if ms.last_force is None:
            raise MissionAbort(f"window never acquired (t={t:.3f} s)")
        F_memo = memorized_crossing_force(
            ms.last_force, ms.eta_hold, ctx.mass, ctx.gravity, mc.mode2_literal
        )
        ms = _with_event(ms, "T2", t, mode=Mode.CROSS_WINDOW, F_memo=F_memo)
        # fall through so a pad already in view is handled this tick

    if ms.mode == Mode.CROSS_WINDOW:
        if not (snap.pad_visible and not ms.land_triggered_once):
            return ms, ForceCommand(ms.F_memo.copy(), ms.yaw_hold)
        ms = _with_event(ms, "T3", t, mode=Mode.LAND, land_triggered_once=True, last_valid_time=t)

    if ms.mode == Mode.LAND:
        if not snap.pad_visible:
            if t - ms.last_valid_time <= mc.grace_time and ms.last_force is not None:
                return ms, ForceCommand(ms.last_force.copy(), ms.yaw_hold)
            if t - ms.last_valid_time <= mc.grace_time:
                return ms, ForceCommand(ctx.mass * ctx.gravity * E3, ms.yaw_hold)
            raise MissionAbort(f"landing pad lost for more than {mc.grace_time} s (t={t:.3f} s)")
        F = landing_force(snap.q_t, snap.phi_t, cfg.landing, ctx.eta_t, ctx.mass, ctx.gravity)
        lateral = orthogonal_projector(ctx.eta_t) @ snap.q_t
        beta = -float(ctx.eta_t @ snap.q_t)
        near = float(np.linalg.norm(lateral)) < mc.q_lateral_max and beta <= mc.beta_touch
        since = (ms.proximity_since if ms.proximity_since is not None else t) if near else None
        ms = dataclasses.replace(ms, last_force=F, last_valid_time=t, proximity_since=since)
        if near and t - since >= mc.hold_time - 1e-12:
            ft = float(np.linalg.norm(F))
            ms = _with_event(ms, "T4", t, mode=Mode.SHUTDOWN, thrust_at_shutdown=ft)
            return ms, ForceCommand(ft * E3, ms.yaw_hold)
        return ms, ForceCommand(F, ms.yaw_hold)

    # shutdown: level attitude, linear thrust ramp to zero
    t4 = ms.event_time("T4")
    scale = max(0.0, 1.0 - (t - t4) / mc.ramp_time)
    return ms, ForceCommand(ms.thrust_at_shutdown * scale * E3, ms.yaw_hold)
