"""
Recovering the window frame from its edges
===========================================

Each window edge and the camera center span a plane; the unit normals of
those planes are enough to recover the window axes and its normal, with
no knowledge of the window size or distance.
"""

import numpy as np

from ibvsquad import presets
from ibvsquad.perception import (
    bearings,
    centroid,
    closest_edge_direction,
    edge_plane_normals_from_bearings,
    weight_alpha,
    weighted_window_centroid,
    window_frame_from_lines,
)

window = presets.reference_window()
xi = window.center + np.array([-1.3, 0.35, 0.2])

p = bearings(window.corners, xi)
h = edge_plane_normals_from_bearings(p)
u, rho, eta = window_frame_from_lines(h, centroid(p))
print("recovered normal", eta, "error", np.linalg.norm(eta - window.normal))

# the closest edge and the blended centroid
l_e, idx = closest_edge_direction(h, u, rho, eta, p)
print("closest edge", idx + 1, "direction", np.round(l_e, 4))

q_w = centroid(p)
alpha = weight_alpha(np.linalg.norm(q_w), 0.18, 0.05)
print("|q_w| =", round(float(np.linalg.norm(q_w)), 4), "alpha =", alpha)
print("qbar_w =", weighted_window_centroid(p, eta, l_e, alpha))

# qbar_w sweeps from xi_w/d_o to xi_w/d_e as alpha goes from 1 to 0
for a in (1.0, 0.5, 0.0):
    print(a, np.round(weighted_window_centroid(p, eta, l_e, a), 4))
