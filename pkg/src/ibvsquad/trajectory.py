"""Trajectory log container and its CSV format."""

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParseError


def _v(prefix):
    return [f"{prefix}_x", f"{prefix}_y", f"{prefix}_z"]


COLUMNS = (
    ["t", "mode"]
    + _v("xi")
    + _v("v")
    + ["roll", "pitch", "yaw"]
    + _v("omega")
    + _v("F")
    + ["F_T"]
    + _v("Gamma")
    + _v("q_t")
    + _v("q_w")
    + _v("qbar_w")
    + ["alpha_w"]
    + _v("phi_t")
    + _v("phi_w")
    + ["d_t", "d_o", "d_e"]
    + _v("eta_w")
    + ["L1", "L2", "L3"]
)
INDEX = {name: i for i, name in enumerate(COLUMNS)}
EVENT_ORDER = ("T1", "T2", "T3", "T4")


@dataclass
class TrajectoryLog:
    """Fixed-step records, one row per step, columns as in :data:`COLUMNS`.

    ``q_t``/``q_w`` and the distances are ground truth (always defined);
    ``qbar_w``, ``alpha_w``, ``phi_t``, ``phi_w`` are the measured values fed
    to the active controller and are zero while their camera has no fix.
    ``eta_w`` holds the latest recovered window normal.
    """

    data: np.ndarray
    events: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def __len__(self):
        return self.data.shape[0]

    def col(self, name):
        return self.data[:, INDEX[name]]

    def vec(self, prefix):
        i = INDEX[f"{prefix}_x"]
        return self.data[:, i : i + 3]

    @property
    def t(self):
        return self.col("t")

    @property
    def mode(self):
        return self.col("mode").astype(int)

    @property
    def dt(self):
        t = self.t
        return float(t[1] - t[0]) if len(t) > 1 else math.nan

    def subsample(self, k):
        return TrajectoryLog(self.data[::k].copy(), dict(self.events), list(self.notes))

    def segment(self, mode):
        mask = self.mode == mode
        return TrajectoryLog(self.data[mask].copy(), dict(self.events), list(self.notes))


def format_events(events):
    parts = [f"{k}={events[k]:.9g}" for k in EVENT_ORDER if k in events]
    return "# events: " + ", ".join(parts)


def write_log_csv(log, path):
    path = Path(path)
    lines = [",".join(COLUMNS)]
    for row in log.data:
        lines.append(",".join(f"{x:.9g}" for x in row))
    lines.append(format_events(log.events))
    for k, val in log.events.items():
        if k not in EVENT_ORDER:
            lines.append(f"# event: {k}={val:.9g}")
    for note in log.notes:
        lines.append(f"# note: {note}")
    path.write_text("\n".join(lines) + "\n")


def read_log_csv(path):
    """Parse a log written by :func:`write_log_csv`."""
    text = Path(path).read_text().splitlines()
    if not text:
        raise ParseError("empty log file", line=1)
    header = text[0].strip().split(",")
    if header != COLUMNS:
        raise ParseError("log header does not match the documented column list", line=1)
    rows, events, notes = [], {}, []
    for lineno, line in enumerate(text[1:], start=2):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("events:") or body.startswith("event:"):
                items = body.split(":", 1)[1]
                for item in items.split(","):
                    item = item.strip()
                    if not item:
                        continue
                    k, _, val = item.partition("=")
                    try:
                        events[k.strip()] = float(val)
                    except ValueError:
                        raise ParseError(f"bad event value {item!r}", line=lineno) from None
            elif body.startswith("note:"):
                notes.append(body.split(":", 1)[1].strip())
            continue
        fields = line.split(",")
        if len(fields) != len(COLUMNS):
            raise ParseError(f"expected {len(COLUMNS)} fields, got {len(fields)}", line=lineno)
        try:
            rows.append([float(x) for x in fields])
        except ValueError as exc:
            raise ParseError(f"non-numeric field ({exc})", line=lineno) from None
    if not rows:
        raise ParseError("log has no records")
    return TrajectoryLog(np.array(rows), events, notes)
