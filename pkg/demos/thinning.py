"""
Two ways to simulate a Hawkes process
=====================================

"""

import numpy as np

from clustermax import MarkModel, Pareto
from clustermax.hawkes import FertilityModel, hawkes_mechanism, simulate_hawkes_by_thinning
from clustermax.processes import ParentProcess, simulate_process
from clustermax.stats import mean_two_sample, variance_two_sample

rng = np.random.default_rng(6)
marks = MarkModel(Pareto(2.0))
t = 200.0

for fert in (FertilityModel.exponential(0.5), FertilityModel.power(0.5, 2.0)):
    # Ogata thinning works on the intensity directly ...
    a = np.array([simulate_hawkes_by_thinning(fert, marks, 1.0, t, rng)[0].size
                  for _ in range(1000)])
    # ... the cluster representation grows each immigrant's family tree
    b = np.array([simulate_process(ParentProcess(1.0), hawkes_mechanism(fert), marks, t, rng,
                                   keep_points=False).n_points
                  for _ in range(1000)])
    print(fert.delay)
    print("   means", a.mean(), b.mean(), " target about", t / (1 - fert.kappa))
    print("  ", mean_two_sample(a, b))
    print("  ", variance_two_sample(a, b))
