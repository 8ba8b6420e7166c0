"""
Running maxima of cluster processes
===================================

"""

import numpy as np

from clustermax import MarkModel, Pareto, adjust_sequences
from clustermax.counts import CountLaw
from clustermax.hawkes import FertilityModel, hawkes_mechanism
from clustermax.processes import (ExponentialOffsets, ParentProcess, mixed_binomial,
                                  renewal_cluster, simulate_process)
from clustermax.rng import derive_stream
from clustermax.stats import ks_one_sample

marks = MarkModel(Pareto(2.0))
seq, frechet = marks.sequences()
parent = ParentProcess(1.0)
t = 1000.0

mechs = {
    "Neyman-Scott": mixed_binomial(CountLaw.poisson(1.0), ExponentialOffsets(1.0)),
    "Bartlett-Lewis": renewal_cluster(CountLaw.poisson(1.0), ExponentialOffsets(1.0)),
    "Hawkes": hawkes_mechanism(FertilityModel.exponential(0.5)),
}

# Each mechanism has two claims per cluster on average, so roughly 2t claims
# arrive by time t.  Normalizing with a_{2t} instead of a_t puts the maximum
# back on the Frechet(2) scale.
for i, (name, mech) in enumerate(mechs.items()):
    reals = [simulate_process(parent, mech, marks, t, derive_stream(3, r, i), keep_points=False)
             for r in range(3000)]
    m = np.array([r.m_t for r in reals])
    adj = adjust_sequences(seq, mech.mean_cluster_size(marks))
    good = ks_one_sample(adj.normalize(m, 1000), frechet.cdf)
    bad = ks_one_sample(adjust_sequences(seq, 1.0).normalize(m, 1000), frechet.cdf)
    print(f"{name:15s} KS adjusted {good.statistic:.4f}  unadjusted {bad.statistic:.4f}")

    # maximum over the first tau(t) whole clusters splits into three pieces
    assert all(r.m_tau == max(r.m_t, r.h_tau, r.leftover) for r in reals)

# One realization with every point kept
real = simulate_process(parent, mechs["Bartlett-Lewis"], marks, 20.0, np.random.default_rng(4))
print(real.times[:5], real.cluster[:5], real.is_ancestor[:5])
print("points after t from clusters started before t:", real.j_t)
