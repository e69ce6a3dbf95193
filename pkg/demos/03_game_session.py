# coding: utf-8

# # Playing a level
#
# Each level has a tempo and a movement family. Targets appear on the
# beat inside a box calibrated from three poses.

# In[1]:

from collections import Counter

from mobility_kit.game import DEFAULT_LEVELS, build_level_schedule, calibrate, replay, summarize
from mobility_kit.synthgen import PERFECT, PatientProfile, calibration_poses, default_boundary, generate

for spec in DEFAULT_LEVELS.values():
    print(spec.id, spec.bpm, "bpm", spec.movement_type, spec.hold_range, "s holds")

# In[2]:

box = calibrate(*calibration_poses(default_boundary()))
script = build_level_schedule(DEFAULT_LEVELS["L2"], box)
print(len(script), "targets, first three:")
for e in script.events[:3]:
    print(f"  {e.kind:4s} {e.hand:5s} appears {e.appear_t:6.3f} s, due {e.deadline_t:6.3f} s")

# A synthetic player who follows every target perfectly clears the level.

# In[3]:

events = replay(script, generate(PERFECT, script, box).samples)
print(summarize(events, script))
print([e.kind for e in events if e.kind.startswith("Milestone") or e.kind == "LevelComplete"])

# A slower, shorter-reaching player misses some of them.

# In[4]:

weak = PatientProfile(amplitude_scale=0.4, speed_scale=0.5, tremor_sd=0.004, reaction_delay=0.4, seed=2)
events = replay(script, generate(weak, script, box).samples)
print(summarize(events, script).completion_fraction)
print(Counter(e.kind for e in events))
