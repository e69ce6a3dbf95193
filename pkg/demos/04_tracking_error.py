# coding: utf-8

# # Tracking error against a reference capture
#
# Absolute pose error compares an estimated trajectory with a reference
# one, frame by frame, after pairing timestamps and optionally aligning the
# two coordinate frames.

# In[1]:

import numpy as np
from scipy.spatial.transform import Rotation

from mobility_kit.session import JointTrajectory
from mobility_kit.tracking import ape, associate, register

rng = np.random.default_rng(3)

# In[2]:

t_est = np.arange(1000) / 50.0
path = np.column_stack([0.2 * np.sin(t_est), 0.15 * np.cos(0.7 * t_est), 0.05 * np.sin(2.1 * t_est)])
est = JointTrajectory("LH", t_est, path)

# the reference runs at 100 Hz in a frame rotated by 10 degrees and shifted
t_ref = np.arange(2000) / 100.0 + 0.002
rot = Rotation.from_euler("z", 10, degrees=True).as_matrix()
truth = np.column_stack([0.2 * np.sin(t_ref), 0.15 * np.cos(0.7 * t_ref), 0.05 * np.sin(2.1 * t_ref)])
ref = JointTrajectory("LH", t_ref, truth @ rot.T + [0.3, 0.0, 0.1] + rng.normal(0, 0.005, truth.shape))

pair = associate(est, ref, 0.01)
print(len(pair.matches), "matched frames,", pair.unmatched_ref, "reference frames unused")

# Richer registration can only lower the error.

# In[3]:

for mode in ("none", "translation", "rigid"):
    s = ape(pair, register(pair, mode))
    print(f"{mode:12s} mean {s.mean:.4f} m  rmse {s.rmse:.4f} m  max {s.max:.4f} m")

tf = register(pair, "rigid")
print(np.round(Rotation.from_matrix(tf.rotation).as_euler("xyz", degrees=True), 2))
