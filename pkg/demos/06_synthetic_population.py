# coding: utf-8

# # A synthetic healthy cohort
#
# Profiles vary reach, speed, tremor and reaction lag. Each one plays all
# four levels; the metric table is then ready for the tests above.
# Three subjects keep this quick; the acceptance suite runs thirteen.

# In[1]:

import numpy as np

from mobility_kit.session import HAND_JOINTS
from mobility_kit.stats import RepeatedMeasures, rm_anova
from mobility_kit.synthgen import generate_population, healthy_population

profiles = healthy_population(3, seed=0)
for p in profiles:
    print(p.name, f"amplitude {p.amplitude_scale:.2f}", f"speed {p.speed_scale:.2f}")

corpus = generate_population(profiles, joints=HAND_JOINTS)

# In[2]:

for metric in ("mean_speed_mps", "rom_m", "volume_m3"):
    d = RepeatedMeasures.from_long(corpus.long_records("RH", metric), ["L1", "L2", "L3", "L4"])
    print(f"{metric:15s}", np.array2string(d.values.mean(axis=0), precision=4))

speed = RepeatedMeasures.from_long(corpus.long_records("RH", "mean_speed_mps"))
print(rm_anova(speed).summary())
print(corpus.to_long_csv().splitlines()[:3])
