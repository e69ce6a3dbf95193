# coding: utf-8

# # Within-subject tests
#
# Every subject plays every level, so levels are compared with
# repeated-measures tests. The parametric RM-ANOVA and the rank-based
# Friedman test are both available, with Bonferroni-corrected pairwise
# follow-ups.

# In[1]:

import numpy as np

from mobility_kit.stats import RepeatedMeasures, friedman, posthoc_bonferroni, rm_anova

rng = np.random.default_rng(11)
subject = rng.normal(0, 0.01, (10, 1))
level_means = np.array([0.03, 0.07, 0.11, 0.17])
speeds = level_means + subject + rng.normal(0, 0.01, (10, 4))
data = RepeatedMeasures(speeds, ("L1", "L2", "L3", "L4"))

# In[2]:

print(rm_anova(data).summary())
print(friedman(data).summary())

# In[3]:

for row in posthoc_bonferroni(data, "paired_t"):
    print(f"{row.a} vs {row.b}: corrected p {row.p_corrected:.2g}", "*" if row.significant else "")
