"""
Tail ratios of single claims and of cluster maxima
==================================================

"""

import numpy as np

from clustermax import MarkModel, Pareto, Exponential, Uniform, adjust_sequences
from clustermax.counts import CountLaw
from clustermax.maxima import (Deterministic, GeometricStopping, IndependentCount,
                               FixedThreshold, exact_tail_ratio, tail_ratio)
from clustermax.stats import trend_report

rng = np.random.default_rng(1)

# For the shipped laws n * P(X > a_n x + b_n) does not just converge to
# -log G(x), it is equal to it once n is large enough to keep the level
# inside the support.
for law, xs in [(Pareto(2.0), [0.5, 1, 2]), (Exponential(1.0), [0.5, 1, 2]),
                (Uniform(1.0), [-2, -1, -0.5])]:
    _, lim = law.sequences()
    print(law, lim.label())
    print("   exact   ", exact_tail_ratio(law, 1000, xs))
    print("   limit   ", lim.tail_measure(np.array(xs, float)))

# Now replace X by the maximum H of a random number of claims.  With the
# index stretched by the mean number of claims per maximum the limit is the
# same as for one claim.
marks = MarkModel(Pareto(2.0))
seq, lim = marks.sequences()
for pol in [Deterministic(3), IndependentCount(CountLaw.poisson(2.0)),
            GeometricStopping(Pareto(2.0))]:
    m = pol.mean_size(marks)
    est = tail_ratio(pol, marks, adjust_sequences(seq, m), 1000, 1.0, 10**6, rng)
    naive = tail_ratio(pol, marks, adjust_sequences(seq, 1.0), 1000, 1.0, 10**6, rng)
    print(f"{pol.kind:20s} mean size {m:.3f}  adjusted {est.estimate:.3f} +- {est.stderr:.3f}"
          f"  unadjusted {naive.estimate:.3f}")

# When the stopping threshold is heavier than the claims the expected number
# of claims per maximum is infinite.  No stretching fixes that: the ratio
# keeps growing with n.
heavy = FixedThreshold(Pareto(0.5), cap=None)
series = []
for n in (10**2, 10**3, 10**4):
    e = tail_ratio(heavy, marks, adjust_sequences(seq, 1.0), n, 1.0, 10**5, rng)
    series.append((n, e.estimate, e.stderr))
    print(f"n={n:6d}  ratio {e.estimate:10.2f}")
print("trend:", trend_report(series))
