import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clustermax.errors import DomainError
from clustermax.evt import ExtremeValueFamily, adjust_sequences, eval_cdf, tail_measure
from clustermax.maxima import exact_tail_ratio
from clustermax.marks import Exponential, Pareto, Uniform, standard_sequences

FRECHET1 = ExtremeValueFamily.frechet(1)
FRECHET2 = ExtremeValueFamily.frechet(2)
GUMBEL = ExtremeValueFamily.gumbel()
WEIBULL1 = ExtremeValueFamily.weibull(1)
FAMILIES = [FRECHET1, FRECHET2, GUMBEL, WEIBULL1, ExtremeValueFamily.weibull(2.5)]


def test_cdf_examples():
    assert eval_cdf(FRECHET1, 1.0) == pytest.approx(math.exp(-1))
    assert eval_cdf(GUMBEL, 0.0) == pytest.approx(math.exp(-1))
    assert eval_cdf(FRECHET2, 0.0) == 0.0
    assert eval_cdf(FRECHET2, -3.0) == 0.0
    assert eval_cdf(WEIBULL1, 0.0) == 1.0
    assert eval_cdf(WEIBULL1, 5.0) == 1.0


def test_tail_measure_examples():
    assert tail_measure(FRECHET2, 2.0) == pytest.approx(0.25)
    assert tail_measure(GUMBEL, 0.0) == pytest.approx(1.0)
    assert tail_measure(GUMBEL, math.log(4)) == pytest.approx(0.25)
    assert tail_measure(WEIBULL1, -1.0) == pytest.approx(1.0)


def test_tail_measure_outside_support():
    with pytest.raises(DomainError):
        tail_measure(FRECHET2, -1.0)
    with pytest.raises(DomainError):
        tail_measure(FRECHET1, 0.0)


def test_gumbel_rejects_shape():
    with pytest.raises(ValueError):
        ExtremeValueFamily("gumbel", 1.0)
    with pytest.raises(ValueError):
        ExtremeValueFamily("frechet", -1.0)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.label())
def test_cdf_is_a_distribution_function(family):
    x = np.linspace(-50, 50, 20001)
    g = family.cdf(x)
    assert np.all(np.diff(g) >= 0)
    assert family.cdf(-1e6) < 1e-12
    assert family.cdf(1e6) > 1 - 1e-5
    # right-continuity at the support edges
    assert family.cdf(0.0) == pytest.approx(family.cdf(1e-12), abs=1e-9)


@pytest.mark.parametrize("family", FAMILIES, ids=lambda f: f.label())
def test_tail_is_minus_log_cdf_at_random_points(family):
    rng = np.random.default_rng(3)
    x = rng.uniform(0.05, 8, 100) if family.kind == "frechet" else rng.uniform(-3, 3, 100)
    assert np.allclose(family.tail_measure(x), -np.log(family.cdf(x)), rtol=1e-12, atol=1e-300)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(FAMILIES), st.floats(0.01, 20), st.floats(0.0, 5))
def test_tail_measure_nonincreasing(family, x, dx):
    if family.kind != "frechet":
        x = x - 10
    assert family.tail_measure(x + dx) <= family.tail_measure(x) + 1e-15


def test_quantile_inverts_cdf():
    q = np.linspace(0.01, 0.99, 50)
    for fam in FAMILIES:
        assert np.allclose(fam.cdf(fam.ppf(q)), q)


def test_standard_sequences_examples():
    seq, lim = standard_sequences(Pareto(1.0))
    assert lim == FRECHET1
    assert 10 * Pareto(1.0).sf(seq.a(10) * 1 + seq.b(10)) == pytest.approx(1.0)

    seq, lim = standard_sequences(Exponential(1.0))
    assert lim == GUMBEL
    n = round(math.e ** 3)
    assert n * Exponential(1.0).sf(seq.a(n) * 0 + seq.b(n)) == pytest.approx(1.0)

    seq, lim = standard_sequences(Uniform(1.0))
    assert lim == WEIBULL1
    assert 100 * Uniform(1.0).sf(seq.a(100) * -1 + seq.b(100)) == pytest.approx(1.0)


def test_standard_sequences_by_name():
    seq, lim = standard_sequences(("pareto", {"alpha": 2.0}))
    assert lim == FRECHET2
    assert seq.a(100) == pytest.approx(10.0)
    with pytest.raises(ValueError):
        standard_sequences(("cauchy", {}))


@pytest.mark.parametrize("law, xs", [
    (Pareto(1.0), (0.5, 1, 2)),
    (Pareto(2.0), (0.5, 1, 2)),
    (Exponential(1.0), (0.5, 1, 2, -1)),
    (Exponential(3.0), (0.0, 1.5)),
    (Uniform(1.0), (-0.5, -1, -2)),
    (Uniform(4.0), (-0.25, -3)),
])
def test_tail_ratio_identity_is_exact_at_all_n(law, xs):
    _, lim = law.sequences()
    for n in (10**2, 10**3, 10**4, 10**5):
        for x in xs:
            # uniform loses a few digits to cancellation in 1 - x/theta
                assert exact_tail_ratio(law, n, x) == pytest.approx(lim.tail_measure(x), rel=1e-9)


def test_adjusted_sequences():
    seq, _ = Pareto(1.0).sequences()
    adj = adjust_sequences(seq, 2.0)
    assert adj.c(50) == pytest.approx(100.0)
    assert adj.d(50) == 0.0
    # Hawkes with kappa = 0.5 has mean cluster size 1 / (1 - 0.5) = 2
    hawkes_adj = adjust_sequences(seq, 1 / (1 - 0.5))
    assert hawkes_adj.mean_cluster_size == 2.0
    # floor of the index
    adj = adjust_sequences(seq, 1.5)
    assert adj.c(3) == pytest.approx(4.0)


def test_adjustment_by_one_is_identity():
    n = np.arange(1, 10**6 + 1, dtype=float)
    for law in (Pareto(2.0), Exponential(2.0), Uniform(3.0)):
        seq, _ = law.sequences()
        adj = adjust_sequences(seq, 1.0)
        assert np.array_equal(adj.c(n), seq.a(n))
        assert np.array_equal(adj.d(n), seq.b(n))


@pytest.mark.parametrize("bad", [0.5, 0.0, -1.0, float("inf"), float("nan")])
def test_adjust_rejects_bad_mean(bad):
    seq, _ = Pareto(1.0).sequences()
    with pytest.raises(DomainError):
        adjust_sequences(seq, bad)
