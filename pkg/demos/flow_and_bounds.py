"""
Optical flow from a spherical cap, and the landing error under wind
===================================================================

Part one integrates image-point velocities over a cap of the sphere that
looks at a textured plane, and compares the result with v/d.

Part two computes the lateral radius inside which a constant horizontal
disturbance leaves the landing vehicle, from the pad centroid feature alone.
"""

import math

import numpy as np

from ibvsquad import presets
from ibvsquad.control import LandingGains
from ibvsquad.geometry import E3
from ibvsquad.perception import flow_from_sphere_samples

rng = np.random.default_rng(0)
v = np.array([0.2, -0.1, 0.3])
d = 1.5
for n in (1_000, 10_000, 100_000, 400_000):
    est = flow_from_sphere_samples(np.array([0.0, 0.0, -d]), v, E3, 0.0, math.radians(30.0), n, rng)
    err = np.linalg.norm(est - v / d) / np.linalg.norm(v / d)
    print(f"{n:7d} samples: relative error {err:.3%}")

from ibvsquad.analysis import ultimate_bound

pad = presets.reference_pad()
gains = LandingGains()
for accel in (0.05, 0.1, 0.2, 0.4):
    b = ultimate_bound(pad, accel, gains, mass=1.676)
    print(f"|Delta|/m = {accel:.2f} m/s^2 -> lateral bound {b.conservative * 100:.2f} cm")
