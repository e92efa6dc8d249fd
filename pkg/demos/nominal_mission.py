"""
Nominal mission: through the window and onto the pad
=====================================================

The vehicle starts two metres in front of a wall, 0.1 m off the window
axis, facing the opening. It servos on the window centroid, loses the
window as it passes through, coasts with the memorized force, picks up
the landing pad and lands on it.
"""

import numpy as np

from ibvsquad import presets
from ibvsquad.cli import run_checks
from ibvsquad.simulator import run_scenario, stop_reason

scenario = presets.nominal_scenario()
log = run_scenario(scenario)

# mode switch times
for name in ("T1", "T2", "T3", "T4"):
    print(f"{name}: {log.events[name]:6.3f} s")
print(f"window plane crossed at {log.events['crossing']:.3f} s, stop: {stop_reason(log)}")

# every acceptance assertion for this run
for a in run_checks(log, scenario):
    print(a.line())

# where did it land
xi = log.vec("xi")[-1]
print("final position", np.round(xi, 4), "speed", round(float(np.linalg.norm(log.vec("v")[-1])), 4))

# time spent in each mode
for mode in (1, 2, 3, 4):
    print(f"mode {mode}: {np.sum(log.mode == mode) * scenario.dt:6.2f} s")
