"""
Post-hoc checks of the closed-loop guarantees on logged trajectories.

Storage functions
-----------------
Landing::

    L1 = (1/n) sum_i (|s_i - xi| - |s_i - c|)          (gradient: q_t^T)
    L2 = L1 + 1/2 m v^T Kp^-1 v

Window (``xi_w = xi - c_w``, ``P = I - eta eta^T``)::

    z  = P v + (kp/kd) P xi_w
    L3 = 1/2 |z|^2 + 1/2 (kp/kd)^2 |P xi_w|^2

The force laws act on ``m v_dot``, so the kinetic weight in ``L2`` carries
the mass and the ``L3`` validity region is ``d_w < kd^2 / (m kp)``.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import NeverCrossed, NeverEntered, NoRoot, SegmentMissing
from .geometry import orthogonal_projector
from .perception import weight_alpha

# ---------------------------------------------------------------------------
# storage functions
# ---------------------------------------------------------------------------


def landing_l1(xi, pad):
    """``L1`` for one position ``(3,)`` or a batch ``(N, 3)``."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    X = np.atleast_2d(xi)
    ref = float(np.mean(np.linalg.norm(pad.markers - pad.center, axis=1)))
    D = np.linalg.norm(pad.markers[None, :, :] - X[:, None, :], axis=2)
    L1 = D.mean(axis=1) - ref
    return float(L1[0]) if single else L1


def landing_l2(xi, v, pad, gains, mass):
    v = np.asarray(v, dtype=float)
    eta = pad.normal
    Kp_inv = orthogonal_projector(eta) / gains.kp12 + np.outer(eta, eta) / gains.kp3
    V = np.atleast_2d(v)
    kin = 0.5 * mass * np.einsum("ij,jk,ik->i", V, Kp_inv, V)
    L2 = landing_l1(xi, pad) + (kin[0] if v.ndim == 1 else kin)
    return float(L2) if v.ndim == 1 else L2


def window_l3(xi, v, window_center, eta_w, gains):
    xi_w = np.atleast_2d(np.asarray(xi, dtype=float) - window_center)
    V = np.atleast_2d(np.asarray(v, dtype=float))
    P = orthogonal_projector(eta_w)
    r = gains.kp / gains.kd
    xp = xi_w @ P
    z = V @ P + r * xp
    L3 = 0.5 * np.sum(z * z, axis=1) + 0.5 * r * r * np.sum(xp * xp, axis=1)
    return float(L3[0]) if np.ndim(xi) == 1 else L3


@dataclass
class LyapunovTrace:
    t: np.ndarray
    values: dict

    def increments(self, name):
        return np.diff(self.values[name])

    def max_increment(self, name, mask=None):
        """Largest per-step increase; ``mask`` selects steps by their start sample."""
        d = self.increments(name)
        if mask is not None:
            m = np.asarray(mask, dtype=bool)
            d = d[m[:-1] & m[1:]]
        return float(d.max()) if d.size else -math.inf


def lyapunov_landing(log, pad, gains, mass):
    xi, v = log.vec("xi"), log.vec("v")
    L1 = landing_l1(xi, pad)
    L2 = landing_l2(xi, v, pad, gains, mass)
    return LyapunovTrace(log.t.copy(), {"L1": np.atleast_1d(L1), "L2": np.atleast_1d(L2)})


def lyapunov_window(log, gains, window):
    L3 = window_l3(log.vec("xi"), log.vec("v"), window.center, window.normal, gains)
    return LyapunovTrace(log.t.copy(), {"L3": np.atleast_1d(L3)})


def blended_distance(alpha, d_o, d_e):
    """``d_w`` with ``1/d_w = alpha/d_o + (1-alpha)/d_e``."""
    alpha = np.asarray(alpha, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(alpha > 0, alpha / d_o, 0.0) + (1.0 - alpha) / d_e
        return 1.0 / inv


def window_validity_mask(log, window, gains, mass, eps=None, delta=None):
    """Mode-1 samples in front of the wall with ``0 < d_w < kd^2 / (m kp)``.

    ``d_w`` is rebuilt from the ground-truth centroid so the mask does not
    depend on which camera happened to have a fix.
    """
    eps = gains.eps if eps is None else eps
    delta = gains.delta if delta is None else delta
    qn = np.linalg.norm(log.vec("q_w"), axis=1)
    alpha = np.array([weight_alpha(q, eps, delta) for q in qn])
    d_o, d_e = log.col("d_o"), log.col("d_e")
    d_w = blended_distance(alpha, d_o, d_e)
    limit = gains.kd**2 / (mass * gains.kp)
    return (log.mode == 1) & (d_o > 0) & (d_w > 0) & (d_w < limit)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass
class Assertion:
    name: str
    value: float
    threshold: float
    op: str
    passed: bool
    detail: str = ""

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        s = f"{self.name}\tvalue={self.value:.6g}\tthreshold={self.op}{self.threshold:.6g}\t{status}"
        if self.detail:
            s += f"\t{self.detail}"
        return s


def _assert(name, value, op, threshold, detail=""):
    ok = {
        "<": value < threshold,
        "<=": value <= threshold,
        ">": value > threshold,
        ">=": value >= threshold,
    }[op]
    return Assertion(name, float(value), float(threshold), op, bool(ok), detail)


@dataclass
class LandingTolerances:
    d_t: float = 0.02
    speed: float = 0.05
    lateral: float = 0.05
    position: float = 0.05
    # per-step L2 increase; None skips the assertion
    dL2: Optional[float] = None


@dataclass
class LandingReport:
    min_d_t: float
    terminal_t: float
    terminal_d_t: float
    terminal_speed: float
    terminal_lateral: float
    terminal_position: float
    max_dL2: float
    first_violation_t: Optional[float]
    assertions: List[Assertion] = field(default_factory=list)

    @property
    def passed(self):
        return all(a.passed for a in self.assertions)


def check_landing(log, pad, tolerances=None, gains=None, mass=None):
    """Assertions on the mode-3 segment; terminal values at its last sample."""
    tol = tolerances or LandingTolerances()
    mask = log.mode == 3
    if not np.any(mask):
        raise SegmentMissing("log has no mode-3 samples")
    idx = np.flatnonzero(mask)
    eta = pad.normal
    xi_t = log.vec("xi")[idx] - pad.center
    d_t = log.col("d_t")[idx]
    beta = -(log.vec("q_t")[idx] @ eta)
    bad = np.flatnonzero((d_t <= 0) | (beta <= 0))
    first_bad = float(log.t[idx[bad[0]]]) if bad.size else None

    k = idx[-1]
    v = log.vec("v")[k]
    xt = log.vec("xi")[k] - pad.center
    lateral = float(np.linalg.norm(orthogonal_projector(eta) @ xt))
    max_dL2 = math.nan
    if gains is not None and mass is not None:
        tr = lyapunov_landing(log, pad, gains, mass)
        max_dL2 = tr.max_increment("L2", mask)

    rep = LandingReport(
        min_d_t=float(d_t.min()),
        terminal_t=float(log.t[k]),
        terminal_d_t=float(log.col("d_t")[k]),
        terminal_speed=float(np.linalg.norm(v)),
        terminal_lateral=lateral,
        terminal_position=float(np.linalg.norm(xt)),
        max_dL2=max_dL2,
        first_violation_t=first_bad,
    )
    detail = "" if first_bad is None else f"first violation t={first_bad:.6g}"
    rep.assertions = [
        _assert("landing.min_d_t", rep.min_d_t, ">", 0.0, detail),
        _assert("landing.min_beta_t", float(beta.min()), ">", 0.0),
        _assert("landing.terminal_d_t", rep.terminal_d_t, "<", tol.d_t),
        _assert("landing.terminal_speed", rep.terminal_speed, "<", tol.speed),
        _assert("landing.terminal_lateral", rep.terminal_lateral, "<", tol.lateral),
        _assert("landing.terminal_position", rep.terminal_position, "<", tol.position),
    ]
    if tol.dL2 is not None:
        rep.assertions.append(_assert("landing.max_dL2", rep.max_dL2, "<=", tol.dL2))
    return rep


@dataclass
class CrossingReport:
    t_w: float
    t_lim: float
    in_W_held: bool
    d_o_rate: float
    min_d_o: float
    min_d_e: float
    assertions: List[Assertion] = field(default_factory=list)

    @property
    def passed(self):
        return all(a.passed for a in self.assertions)


def _zero_crossing_index(d_o):
    """First index ``k`` with ``d_o[k] <= 0`` after a positive sample."""
    neg = np.flatnonzero(d_o <= 0.0)
    if neg.size == 0 or neg[0] == 0:
        return None
    return int(neg[0])


def check_crossing(log, window, eps, rate_max=0.0, edge_margin=0.0):
    """Window-crossing assertions.

    ``t_lim`` is the first sample behind the wall (``d_o <= 0``) and
    ``t_w`` the first sample before it with ``|q_w| <= eps``.
    ``d_o_rate`` is the central difference of ``d_o`` at ``t_lim``.
    """
    t = log.t
    d_o = log.col("d_o")
    k = _zero_crossing_index(d_o)
    if k is None:
        raise NeverCrossed(
            f"d_o never changes sign (last d_o={d_o[-1]:.4g} m at t={t[-1]:.4g} s)"
        )
    qn = np.linalg.norm(log.vec("q_w"), axis=1)
    inside = np.flatnonzero(qn[:k] <= eps)
    if inside.size == 0:
        raise NeverEntered(
            f"|q_w| never reached eps={eps:g} before the wall plane (min {qn[:k].min():.4g})"
        )
    j = int(inside[0])
    lo, hi = max(k - 1, 0), min(k + 1, len(t) - 1)
    rate = float((d_o[hi] - d_o[lo]) / (t[hi] - t[lo]))
    held = bool(np.all(qn[j:k] <= eps))
    rep = CrossingReport(
        t_w=float(t[j]),
        t_lim=float(t[k]),
        in_W_held=held,
        d_o_rate=rate,
        min_d_o=float(d_o[:k].min()),
        min_d_e=float(log.col("d_e")[j:k].min()),
    )
    worst = float(qn[j:k].max())
    rep.assertions = [
        _assert("crossing.q_w_at_t_w", float(qn[j]), "<=", eps),
        _assert("crossing.max_q_w_in_W", worst, "<=", eps),
        _assert("crossing.min_d_o", rep.min_d_o, ">", 0.0),
        _assert("crossing.d_o_rate", rate, "<", rate_max),
        _assert("crossing.min_d_e", rep.min_d_e, ">", edge_margin),
    ]
    return rep


def write_report(path, assertions, header=None):
    lines = [] if header is None else [f"# {h}" for h in header]
    lines += [a.line() for a in assertions]
    Path(path).write_text("\n".join(lines) + "\n")


def read_report(path):
    """Return ``[(name, passed)]`` from a ``.report`` file."""
    out = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        f = line.split("\t")
        out.append((f[0], f[3] == "PASS"))
    return out


# ---------------------------------------------------------------------------
# ultimate bound under a horizontal disturbance
# ---------------------------------------------------------------------------


@dataclass
class UltimateBound:
    from_kp: float
    from_kd: float

    @property
    def conservative(self):
        return max(self.from_kp, self.from_kd)


def lateral_centroid_norm(r, direction, pad, d_t):
    """``|P q_t|`` at lateral offset ``r * direction`` and height ``d_t``."""
    eta = pad.normal
    xi = pad.center + r * direction - d_t * eta
    b = pad.markers - xi
    b /= np.linalg.norm(b, axis=1)[:, None]
    q = -b.mean(axis=0)
    return float(np.linalg.norm(q - eta * float(eta @ q)))


def _solve_lateral(target, direction, pad, d_t, tol, r_max):
    if target == 0.0:
        return 0.0
    # monotone scan for the first bracket, then bisection
    grid = np.linspace(0.0, r_max, 4001)
    vals = np.array([lateral_centroid_norm(r, direction, pad, d_t) for r in grid])
    above = np.flatnonzero(vals >= target)
    if above.size == 0:
        raise NoRoot(
            f"|P q_t| never reaches {target:.4g} (sup on scan {vals.max():.4g}): "
            "disturbance exceeds the feature authority"
        )
    hi_i = int(above[0])
    lo, hi = grid[max(hi_i - 1, 0)], grid[hi_i]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if lateral_centroid_norm(mid, direction, pad, d_t) >= target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def ultimate_bound(pad, accel_max, gains, mass=1.0, direction=None, d_t=1e-4, tol=1e-9, r_max=None):
    """Lateral radius where ``|P q_t| = accel_max / (k / m)`` for ``k`` in ``{kp12, kd12}``.

    ``accel_max`` bounds ``|Delta| / m``. ``direction`` is the horizontal
    direction of the disturbance (any in-plane axis when omitted).
    """
    if accel_max < 0:
        raise ValueError("accel_max must be non-negative")
    eta = pad.normal
    if direction is None:
        helper = np.array([1.0, 0.0, 0.0]) if abs(eta[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        direction = helper
    direction = np.asarray(direction, dtype=float)
    direction = direction - eta * float(eta @ direction)
    direction = direction / np.linalg.norm(direction)
    if r_max is None:
        span = float(np.max(np.linalg.norm(pad.markers - pad.center, axis=1)))
        r_max = 200.0 * span
    roots = []
    for k in (gains.kp12, gains.kd12):
        roots.append(_solve_lateral(accel_max * mass / k, direction, pad, d_t, tol, r_max))
    return UltimateBound(*roots)
