import numpy as np
import pytest
from scipy import stats as sps

from clustermax import stats
from clustermax.errors import DomainError


def test_ks_constant_sample():
    rep = stats.ks_one_sample(np.full(100, 0.5), sps.uniform.cdf)
    assert rep.statistic == pytest.approx(0.5)
    assert not rep.passed
    assert rep.critical == pytest.approx(0.1628)


def test_ks_uniform_null(rng):
    assert stats.ks_one_sample(rng.random(10**4), sps.uniform.cdf).passed


def test_ks_needs_enough_points():
    with pytest.raises(DomainError):
        stats.ks_one_sample(np.arange(10.0), sps.uniform.cdf)


def test_ks_false_rejection_rate():
    rng = np.random.default_rng(61)
    rejected = sum(not stats.ks_one_sample(rng.random(500), sps.uniform.cdf).passed
                   for _ in range(1000))
    # 1% level: binomial(1000, 0.01) stays below 22 with overwhelming probability
    assert rejected <= 22


def test_ks_pvalues_uniform_under_null():
    rng = np.random.default_rng(67)
    pvals = [sps.kstest(rng.random(1000), "uniform").pvalue for _ in range(1000)]
    assert stats.ks_one_sample(pvals, sps.uniform.cdf).passed


def test_discrete_gof_all_mass_vs_uniform():
    rep = stats.discrete_gof_samples(np.full(1000, 2), lambda n: np.full(n.shape, 0.1),
                                     np.arange(10))
    assert not rep.passed and rep.statistic > 1000
    assert rep.extra["tv"] == pytest.approx(0.9)


def test_ks_two_sample_identical(rng):
    a = rng.random(500)
    rep = stats.ks_two_sample(a, a)
    assert rep.statistic == 0.0 and rep.passed


def test_ks_two_sample_shift(rng):
    assert not stats.ks_two_sample(rng.random(2000), rng.random(2000) + 0.2).passed


def test_empirical_distribution():
    emp = stats.EmpiricalDistribution([3.0, 1.0, 2.0])
    assert emp(2.0) == pytest.approx(2 / 3)
    x, y = emp.plot_data()
    assert list(x) == [1.0, 2.0, 3.0] and y[-1] == 1.0
    with pytest.raises(ValueError):
        stats.EmpiricalDistribution([2.0, 1.0], presorted=True)


def test_pooling_keeps_totals():
    e, (o,) = stats._pool_cells([1.0, 50.0, 2.0, 40.0, 3.0, 1.0], [np.arange(6.0)])
    assert e.sum() == pytest.approx(97.0) and o.sum() == 15.0
    assert np.all(e >= stats.MIN_EXPECTED)
    assert list(e) == [51.0, 46.0]


def test_discrete_gof_geometric_null(rng):
    k = rng.geometric(0.3, 10**5)
    rep = stats.discrete_gof_samples(k, lambda n: sps.geom.pmf(n, 0.3), np.arange(1, 60))
    assert rep.passed
    assert 0 <= rep.extra["tv"] < 0.01


def test_discrete_gof_degenerate_sample():
    rep = stats.discrete_gof_samples(np.full(1000, 3), lambda n: sps.geom.pmf(n, 0.3),
                                     np.arange(1, 60))
    assert not rep.passed
    assert 0 <= rep.extra["tv"] <= 1


def test_discrete_gof_counts_form():
    counts = np.array([500, 500])
    assert stats.discrete_gof(counts, lambda n: np.full(2, 0.5), np.array([0, 1])).passed


def test_zero_probability_cell_rejects():
    rep = stats.discrete_gof_samples(np.array([0] * 100 + [1] * 100 + [5]),
                                     lambda n: np.where(n < 2, 0.5, 0.0), np.arange(6))
    assert rep.statistic == np.inf and not rep.passed


def test_homogeneity(rng):
    a, b = rng.poisson(3, 10**4), rng.poisson(3, 10**4)
    assert stats.chi2_homogeneity(a, b).passed
    assert not stats.chi2_homogeneity(a, rng.poisson(3.3, 10**4)).passed


def test_mean_and_variance_tests(rng):
    a = rng.normal(0, 1, 5000)
    assert stats.mean_two_sample(a, rng.normal(0, 2, 5000)).passed
    assert not stats.variance_two_sample(a, rng.normal(0, 2, 5000)).passed
    assert not stats.mean_two_sample(a, rng.normal(0.2, 1, 5000)).passed


def test_report_json():
    d = stats.ks_one_sample(np.linspace(0.005, 0.995, 100), sps.uniform.cdf).to_json()
    assert d["pass"] is True and d["n"] == [100]


@pytest.mark.parametrize("series, verdict", [
    ([(1, 0.5, 0.01), (2, 0.3, 0.01), (3, 0.1, 0.01)], stats.DECREASING),
    ([(1, 0.1, 0.01), (2, 0.3, 0.01), (3, 0.5, 0.01)], stats.INCREASING),
    ([(1, 0.1, 0.1), (2, 0.15, 0.1), (3, 0.12, 0.1)], stats.FLAT),
    ([(3, 0.1, 0.01), (1, 0.5, 0.01), (2, 0.3, 0.01)], stats.DECREASING),
])
def test_trend(series, verdict):
    assert stats.trend_report(series) == verdict


def test_trend_needs_three_points():
    with pytest.raises(ValueError):
        stats.trend_report([(1, 0.0, 1.0), (2, 0.0, 1.0)])
