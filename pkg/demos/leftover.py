"""
Points that spill over the horizon
==================================

"""

import numpy as np

from clustermax import MarkModel, Pareto
from clustermax.counts import CountLaw
from clustermax.processes import (ExponentialOffsets, LomaxOffsets, ParentProcess,
                                  expected_leftover_mixed_binomial, mixed_binomial,
                                  simulate_process)
from clustermax.stats import mean_se, trend_report

rng = np.random.default_rng(5)
marks = MarkModel(Pareto(2.0))
parent = ParentProcess(1.0)

# With light-tailed offsets the number J_t of late points settles to a
# constant, so J_t / t dies out like 1/t.
mech = mixed_binomial(CountLaw.poisson(2.0), ExponentialOffsets(1.0))
series = []
for t in (1e2, 1e3, 1e4):
    j = np.array([simulate_process(parent, mech, marks, t, rng, keep_points=False).j_t
                  for _ in range(500)])
    m, se = mean_se(j / t)
    series.append((t, m, se))
    print(f"t={t:7.0f}  E J_t ~ {j.mean():.3f}   closed form "
          f"{expected_leftover_mixed_binomial(1.0, 2.0, 1.0, t):.3f}")
print(trend_report(series))

# Heavy offsets (tail index 0.5, infinite mean) let J_t grow, but still
# slower than t.
mech = mixed_binomial(CountLaw.poisson(2.0), LomaxOffsets(0.5))
for t in (1e2, 1e3, 1e4):
    j = np.array([simulate_process(parent, mech, marks, t, rng, keep_points=False).j_t
                  for _ in range(200)])
    print(f"t={t:7.0f}  mean J_t/t {np.mean(j / t):.4f}")
