# coding: utf-8

# # Pose logs and dropouts
#
# A pose log is JSON Lines: a header naming the format and sample rate,
# then one record per frame with joint positions in meters.

# In[1]:

import io

import numpy as np

from mobility_kit.session import extract_trajectory, fill_gaps, parse_pose_log, serialize_pose_log
from mobility_kit.session import PoseSample

# In[2]:

# a hand circling at 0.5 Hz, sampled at 50 Hz for four seconds
t = np.arange(200) / 50.0
circle = np.column_stack([0.1 * np.cos(np.pi * t), 0.1 * np.sin(np.pi * t), np.zeros_like(t)])
samples = [PoseSample(ti, {"LH": tuple(p)}) for ti, p in zip(t, circle)]

# Knock out two stretches: a short 0.1 s blip and a 0.6 s dropout.

# In[3]:

keep = ~(((t > 1.0) & (t < 1.1)) | ((t > 2.5) & (t < 3.1)))
text = serialize_pose_log([s for s, k in zip(samples, keep) if k], rate_hz=50)
print(text.splitlines()[0])
print(text.splitlines()[1][:80], "...")

# In[4]:

parsed = parse_pose_log(io.StringIO(text))
traj = extract_trajectory(parsed, "LH")
print(len(traj), "samples survive out of", len(t))

# The short blip is bridged by linear interpolation. The long one is
# left open: the trajectory is split there and the gap is reported.

# In[5]:

filled, gaps = fill_gaps(traj, max_gap=0.2)
print(len(filled), "samples after filling")
for g in gaps:
    print(f"split gap {g.start_t:.2f} s to {g.end_t:.2f} s ({g.duration:.2f} s)")
print("pieces:", len(filled.segments()))
