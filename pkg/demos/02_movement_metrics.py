# coding: utf-8

# # Movement metrics
#
# Mean speed is path length over elapsed time. ROM is the RMS distance
# from the trajectory's centroid. Workspace volume comes from the convex
# hull of every visited position.

# In[1]:

import numpy as np

from mobility_kit.hull import convex_hull
from mobility_kit.kinematics import mean_speed, range_of_motion, workspace_volume
from mobility_kit.session import JointTrajectory

rng = np.random.default_rng(7)

# In[2]:

t = np.arange(3000) / 50.0
reach = np.column_stack([
    0.15 * np.sin(2 * np.pi * 0.3 * t),
    0.10 * np.sin(2 * np.pi * 0.2 * t + 1.0),
    0.05 * np.sin(2 * np.pi * 0.7 * t),
])
hand = JointTrajectory("RH", t, reach)

print(f"mean speed {mean_speed(hand).mean_speed:.4f} m/s")
print(f"ROM        {range_of_motion(hand).rom:.4f} m")
print(f"volume     {workspace_volume(hand).volume:.6f} m^3")

# The hull behind the volume is built from scratch. It reports a
# degenerate rank instead of a volume when the points are flat.

# In[3]:

h = convex_hull(reach)
print(h.n_facets, "facets over", len(h.points), "hull vertices")

flat = reach.copy()
flat[:, 2] = 0.0
print(workspace_volume(JointTrajectory("RH", t, flat)))

# Rotating and shifting the data changes nothing; scaling by s scales
# speed and ROM by s and volume by s cubed.

# In[4]:

q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
q *= np.sign(np.linalg.det(q))
moved = JointTrajectory("RH", t + 10.0, 2.0 * reach @ q.T + [1.0, -2.0, 0.5])
print(mean_speed(moved).mean_speed / mean_speed(hand).mean_speed)
print(workspace_volume(moved).volume / workspace_volume(hand).volume)
