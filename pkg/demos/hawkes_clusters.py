"""
Sizes of Hawkes clusters
========================

"""

import numpy as np

from clustermax import MarkModel, Pareto
from clustermax.hawkes import (FertilityModel, borel_pmf, cluster_sizes, hitting_times,
                               sample_hawkes_cluster)
from clustermax.stats import chi2_homogeneity

rng = np.random.default_rng(2)
marks = MarkModel(Pareto(2.0))

# A single cascade: every point lists its generation and the index of the
# point that triggered it.
c = sample_hawkes_cluster(FertilityModel.exponential(0.7), marks, 1.0, rng)
for off, gen, par in zip(c.offsets[:8], c.generation[:8], c.parent_index[:8]):
    print(f"offset {off:7.3f}   generation {gen}   parent {par}")

# Without mark effects the total progeny is Borel(kappa)
for kappa in (0.2, 0.5, 0.8):
    s = cluster_sizes(FertilityModel.exponential(kappa), marks, 10**5, rng)
    n = np.arange(1, 6)
    emp = np.array([(s == k).mean() for k in n])
    print(f"kappa={kappa}: mean {s.mean():.3f} (1/(1-kappa) = {1 / (1 - kappa):.3f})")
    print("   empirical", np.round(emp, 4))
    print("   Borel    ", np.round(borel_pmf(n, kappa), 4))

# The same law comes out of a skip-free random walk: start at 1, add a
# Poisson(kappa) number of children and remove one point per step.
fert = FertilityModel.exponential(0.5)
z = hitting_times(fert, marks, 10**5, rng)
s = cluster_sizes(fert, marks, 10**5, rng)
print(chi2_homogeneity(z, s))
