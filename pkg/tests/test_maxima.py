import numpy as np
import pytest
from scipy import stats as sps

from clustermax import stats
from clustermax.counts import CountLaw
from clustermax.errors import CappedRealizationError, ConfigurationError
from clustermax.evt import adjust_sequences
from clustermax.marks import Exponential, MarkModel, Pareto, Uniform
from clustermax.maxima import (Deterministic, FixedThreshold, GeometricStopping,
                               IndependentCount, sample_blocks, sample_h, tail_ratio)
from clustermax.rng import derive_stream


def test_deterministic_single_draw_is_the_claim_law(rng, pareto2):
    h = sample_blocks(Deterministic(1), pareto2, 10**5, rng).h
    rep = stats.ks_one_sample(h, pareto2.claim_cdf)
    assert rep.statistic < 0.01


def test_deterministic_blocks_consume_fixed_draws(pareto2):
    batch = sample_blocks(Deterministic(3), pareto2, 2, np.random.default_rng(1))
    assert list(batch.ends) == [3, 6]
    # same six raw draws, split in two blocks of three
    x = pareto2.sample_claims(np.random.default_rng(1), 6)
    assert batch.h[0] == x[:3].max() and batch.h[1] == x[3:].max()


def test_geometric_stopping_iid_pair_has_mean_two(rng, pareto2):
    pol = GeometricStopping(Pareto(2.0))
    assert pol.success_probability(pareto2) == 0.5
    k = sample_blocks(pol, pareto2, 10**5, rng).k
    se = np.sqrt((1 - 0.5) / 0.5**2 / k.size)
    assert abs(k.mean() - 2.0) < 3 * se


@pytest.mark.parametrize("pol", [
    GeometricStopping(Pareto(2.0)),
    GeometricStopping(Exponential(0.5), coupling="comonotone"),
    GeometricStopping(coupling="shift", shift=0.5),
], ids=["independent", "comonotone", "shift"])
def test_geometric_stopping_size_law(pol, rng, pareto2):
    p = pol.success_probability(pareto2)
    k = sample_blocks(pol, pareto2, 10**5, rng).k
    support = np.arange(1, 40)
    rep = stats.discrete_gof_samples(k, lambda n: sps.geom.pmf(n, p), support)
    assert rep.extra["tv"] < 0.01
    assert rep.passed, rep


def test_comonotone_probability_from_prepass(pareto2):
    # with s = 1 - U: X = s**-0.5 and W = -2 log s; X > W off [s1, s2]
    from scipy.optimize import brentq
    pol = GeometricStopping(Exponential(0.5), coupling="comonotone")
    f = lambda s: s**-0.5 + 2 * np.log(s)
    s1 = brentq(f, 1e-9, 1 / 16)
    s2 = brentq(f, 1 / 16, 1.0 - 1e-12)
    assert pol.success_probability(pareto2) == pytest.approx(s1 + 1 - s2, abs=3e-3)


def test_block_lengths_mean(rng, pareto2):
    pol = GeometricStopping(Exponential(0.5))
    p = pol.success_probability(pareto2)
    k = sample_blocks(pol, pareto2, 10**4, rng).k
    se = np.sqrt((1 - p) / p**2 / k.size)
    assert abs(k.mean() - 1 / p) < 3 * se


def test_blocks_match_independent_draws(pareto2):
    pol = GeometricStopping(Pareto(2.0))
    blocks = sample_blocks(pol, pareto2, 10**4, derive_stream(5)).h
    single = np.array([sample_h(pol, pareto2, derive_stream(6, r)).h for r in range(10**4)])
    assert stats.ks_two_sample(blocks, single).passed


@pytest.mark.parametrize("pol", [
    Deterministic(2),
    IndependentCount(CountLaw.poisson(2)),
    GeometricStopping(Pareto(2.0)),
], ids=["deterministic", "poisson", "geometric"])
def test_consecutive_block_maxima_uncorrelated(pol, rng, pareto2):
    batch = sample_blocks(pol, pareto2, 10**4, rng)
    h = np.where(batch.empty, -1.0, batch.h)
    rho = sps.spearmanr(h[:-1], h[1:]).statistic
    assert abs(rho) < 0.03


def test_fixed_threshold_maximum_exceeds_threshold(rng, pareto2):
    pol = FixedThreshold(Exponential(1.0))
    w_rng = np.random.default_rng(8)
    batch = sample_blocks(pol, pareto2, 10**4, w_rng)
    w = Exponential(1.0).sample(np.random.default_rng(8), 10**4)
    assert np.all(batch.h > w)
    assert np.all(batch.k >= 1)


def test_fixed_threshold_matches_brute_force(pareto2):
    """Shortcut sampler against literally scanning X until it beats W_1."""
    pol = FixedThreshold(Exponential(1.0))
    fast = sample_blocks(pol, pareto2, 5000, np.random.default_rng(1))
    rng = np.random.default_rng(2)
    h_slow, k_slow = [], []
    for _ in range(5000):
        w = Exponential(1.0).sample(rng)
        k = 0
        while True:
            k += 1
            x = pareto2.sample_claims(rng)
            if x > w:
                break
        h_slow.append(x)
        k_slow.append(k)
    assert stats.ks_two_sample(fast.h, h_slow).passed
    assert stats.mean_two_sample(fast.k, k_slow).passed


def test_fixed_threshold_heavy_w_hits_the_cap(pareto2):
    pol = FixedThreshold(Pareto(0.5))
    with pytest.raises(CappedRealizationError) as err:
        sample_blocks(pol, pareto2, 10**4, np.random.default_rng(0))
    assert "threshold" in err.value.partial


def test_geometric_stopping_that_never_fires(pareto2):
    pol = GeometricStopping(coupling="shift", shift=50.0, shift_scale=1.0, cap=10**4)
    with pytest.raises(CappedRealizationError):
        sample_blocks(pol, pareto2, 1, np.random.default_rng(0))


def test_uniform_marks_zero_success_is_configuration_error():
    marks = MarkModel(Uniform(1.0))
    pol = GeometricStopping(Uniform(1.0), coupling="shift", shift=100.0)
    with pytest.raises(ConfigurationError):
        pol.mean_size(marks)


def test_independent_count_empty_blocks(rng, pareto2):
    batch = sample_blocks(IndependentCount(CountLaw.poisson(0.5)), pareto2, 1000, rng)
    assert np.all(batch.empty == (batch.k == 0))
    assert np.all(np.isneginf(batch.h[batch.empty]))
    assert np.all(batch.h[~batch.empty] >= 1)


def test_tail_ratio_single_claim(rng):
    marks = MarkModel(Pareto(1.0))
    seq, _ = marks.sequences()
    est = tail_ratio(Deterministic(1), marks, adjust_sequences(seq, 1.0), 10**3, 1.0,
                     10**6, rng)
    assert abs(est.estimate - 1.0) < 3 * est.stderr


def test_tail_ratio_geometric_stopping_matches_limit(rng, pareto2):
    pol = GeometricStopping(Pareto(2.0))
    seq, lim = pareto2.sequences()
    adj = adjust_sequences(seq, pol.mean_size(pareto2))
    for est in tail_ratio(pol, pareto2, adj, 10**3, [0.5, 1.0, 2.0], 10**6, rng):
        assert abs(est.estimate - lim.tail_measure(est.x)) < 3 * est.stderr


def test_block_maxima_oracle_over_raw_draws(pareto2):
    """Max of n cluster maxima equals the max over T(n) raw draws; normalized
    by a_floor(E[K] n) it is Fréchet(2)."""
    pol = GeometricStopping(Pareto(2.0))
    seq, lim = pareto2.sequences()
    adj = adjust_sequences(seq, 2.0)
    n = 1000
    rng = np.random.default_rng(44)
    m = np.empty(2000)
    for r in range(m.size):
        w, x = pol.draw_pairs(pareto2, rng, 4 * n)
        ends = np.flatnonzero(x > w)
        assert ends.size >= n
        m[r] = x[: ends[n - 1] + 1].max()
    assert stats.ks_one_sample(adj.normalize(m, n), lim.cdf).passed


def test_tail_ratio_divergence_when_threshold_is_heavier(pareto2):
    pol = FixedThreshold(Pareto(0.5), cap=None)
    seq, _ = pareto2.sequences()
    adj = adjust_sequences(seq, 1.0)
    rng = np.random.default_rng(9)
    series = []
    for n in (10**2, 10**3, 10**4):
        est = tail_ratio(pol, pareto2, adj, n, 1.0, 10**5, rng)
        series.append((n, est.estimate, est.stderr))
    assert stats.trend_report(series) == stats.INCREASING
