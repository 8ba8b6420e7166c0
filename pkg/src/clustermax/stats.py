"""Goodness-of-fit statistics and convergence summaries.

All tests run at the 1% level with asymptotic critical values: 1.628/sqrt(n)
for Kolmogorov-Smirnov, chi-square quantiles after pooling cells with
expected count below 5.
"""

from dataclasses import asdict, dataclass, field
from typing import Tuple

import numpy as np
from scipy import stats as sps

from .errors import DomainError

KS_COEF_01 = 1.628
Z_01 = float(sps.norm.ppf(0.995))
MIN_EXPECTED = 5.0


class EmpiricalDistribution:
    """Sorted sample with its empirical CDF."""

    def __init__(self, values, presorted=False):
        v = np.asarray(values, dtype=float).ravel()
        if presorted:
            if np.any(np.diff(v) < 0):
                raise ValueError("values are not sorted")
        else:
            v = np.sort(v)
        self.sorted_values = v

    @property
    def n(self):
        return self.sorted_values.size

    def __call__(self, x):
        return np.searchsorted(self.sorted_values, x, side="right") / self.n

    def plot_data(self):
        """Step points (x, F_n(x)) ready to write as two columns."""
        return self.sorted_values, np.arange(1, self.n + 1) / self.n


def _emp(x):
    return x if isinstance(x, EmpiricalDistribution) else EmpiricalDistribution(x)


@dataclass
class GofReport:
    statistic: float
    n: Tuple[int, ...]
    critical: float
    passed: bool
    notes: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        # numpy scalars do not survive json.dumps
        self.statistic = float(self.statistic)
        self.critical = float(self.critical)
        self.passed = bool(self.passed)
        self.n = tuple(int(v) for v in self.n)

    def to_json(self):
        d = asdict(self)
        d["pass"] = d.pop("passed")
        d["n"] = list(self.n)
        return d


def ks_one_sample(emp, cdf, min_n=50):
    emp = _emp(emp)
    if emp.n < min_n:
        raise DomainError(f"need at least {min_n} observations, got {emp.n}")
    stat = float(sps.kstest(emp.sorted_values, cdf).statistic)
    crit = KS_COEF_01 / np.sqrt(emp.n)
    return GofReport(stat, (emp.n,), float(crit), stat < crit, "one-sample KS, 1% asymptotic")


def ks_two_sample(a, b, min_n=50):
    a, b = _emp(a), _emp(b)
    if min(a.n, b.n) < min_n:
        raise DomainError(f"need at least {min_n} observations per sample")
    stat = float(sps.ks_2samp(a.sorted_values, b.sorted_values).statistic)
    crit = KS_COEF_01 * np.sqrt((a.n + b.n) / (a.n * b.n))
    return GofReport(stat, (a.n, b.n), float(crit), stat < crit, "two-sample KS, 1% asymptotic")


def _pool_cells(expected, observed):
    """Merge cells from both ends inward until every expected count >= 5."""
    e = list(expected)
    o = [np.asarray(x, dtype=float).copy() for x in observed]
    # right tail
    while len(e) > 1 and e[-1] < MIN_EXPECTED:
        last = e.pop()
        e[-1] += last
        for arr_i, arr in enumerate(o):
            arr[-2] += arr[-1]
            o[arr_i] = arr[:-1]
    # left tail
    while len(e) > 1 and e[0] < MIN_EXPECTED:
        first = e.pop(0)
        e[0] += first
        for arr_i, arr in enumerate(o):
            arr[1] += arr[0]
            o[arr_i] = arr[1:]
    # any interior cell still below threshold merges into its right neighbour
    i = 0
    while i < len(e) - 1:
        if e[i] < MIN_EXPECTED:
            cell = e.pop(i)
            e[i] += cell
            for arr_i, arr in enumerate(o):
                arr[i + 1] += arr[i]
                o[arr_i] = np.delete(arr, i)
        else:
            i += 1
    return np.asarray(e), o


def discrete_gof(counts, pmf, support):
    """Chi-square fit of an integer histogram to ``pmf`` on ``support``.

    ``counts[i]`` is the count of value ``support[i]``; draws outside the
    support go into a remainder cell whose probability is 1 - sum(pmf).
    ``extra['tv']`` is the total-variation distance on support + remainder.
    """
    support = np.asarray(support)
    counts = np.asarray(counts, dtype=float)
    if counts.shape != support.shape:
        raise ValueError("counts and support must align")
    total = float(counts.sum())
    if total <= 0:
        raise DomainError("empty histogram")
    p = np.asarray(pmf(support), dtype=float)
    rest_p = max(0.0, 1.0 - p.sum())
    return _chi2_against(np.append(counts, 0.0), np.append(p, rest_p), total,
                         "chi-square, pooled tails")


def discrete_gof_samples(samples, pmf, support):
    """Like :func:`discrete_gof` but from raw integer draws."""
    samples = np.asarray(samples)
    support = np.asarray(support)
    counts = np.array([(samples == k).sum() for k in support], dtype=float)
    p = np.asarray(pmf(support), dtype=float)
    rest = float(samples.size - counts.sum())
    rest_p = max(0.0, 1.0 - p.sum())
    return _chi2_against(np.append(counts, rest), np.append(p, rest_p), float(samples.size),
                         "chi-square, pooled tails")


def _chi2_against(obs, probs, total, notes):
    tv = 0.5 * float(np.abs(obs / total - probs).sum())
    keep = probs > 0
    e, (o,) = _pool_cells(total * probs[keep], [obs[keep]])
    dof = e.size - 1
    if dof < 1:
        raise DomainError("fewer than two cells left after pooling")
    # mass on a zero-probability cell rejects outright
    stat = np.inf if np.any(obs[~keep] > 0) else float(((o - e) ** 2 / e).sum())
    crit = float(sps.chi2.ppf(0.99, dof))
    return GofReport(float(stat), (int(total),), crit, bool(stat < crit), notes,
                     {"tv": tv, "dof": int(dof)})


def chi2_homogeneity(a, b, max_value=None):
    """Two-sample chi-square homogeneity test on integer draws.

    Values above ``max_value`` share one tail cell; cells are pooled until
    every expected count in both rows is at least 5.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    lo = int(min(a.min(), b.min()))
    hi = int(max(a.max(), b.max())) if max_value is None else int(max_value)
    edges = np.arange(lo, hi + 2)
    ca = np.bincount(np.clip(a, lo, hi + 1) - lo, minlength=edges.size)[: edges.size]
    cb = np.bincount(np.clip(b, lo, hi + 1) - lo, minlength=edges.size)[: edges.size]
    na, nb = a.size, b.size
    pooled = (ca + cb) / (na + nb)
    e_min = pooled * min(na, nb)
    _, (ca2, cb2) = _pool_cells(e_min, [ca, cb])
    ea = (ca2 + cb2) * na / (na + nb)
    eb = (ca2 + cb2) * nb / (na + nb)
    stat = float(((ca2 - ea) ** 2 / ea).sum() + ((cb2 - eb) ** 2 / eb).sum())
    dof = ca2.size - 1
    if dof < 1:
        raise DomainError("fewer than two cells left after pooling")
    crit = float(sps.chi2.ppf(0.99, dof))
    tv = 0.5 * float(np.abs(ca / na - cb / nb).sum())
    return GofReport(stat, (na, nb), crit, stat < crit, "chi-square homogeneity",
                     {"dof": int(dof), "tv": tv})


def mean_two_sample(a, b):
    """Welch z-test for equal means at the 1% level."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    se = np.sqrt(a.var(ddof=1) / a.size + b.var(ddof=1) / b.size)
    z = float(abs(a.mean() - b.mean()) / se) if se > 0 else 0.0
    return GofReport(z, (a.size, b.size), Z_01, z < Z_01, "Welch z, two-sided 1%",
                     {"mean_a": float(a.mean()), "mean_b": float(b.mean()),
                      "var_a": float(a.var(ddof=1)), "var_b": float(b.var(ddof=1))})


def variance_two_sample(a, b):
    """Levene-type check on variances (Brown-Forsythe), 1% level."""
    res = sps.levene(a, b, center="median")
    stat = float(res.statistic)
    crit = float(sps.f.ppf(0.99, 1, len(a) + len(b) - 2))
    return GofReport(stat, (len(a), len(b)), crit, stat < crit, "Brown-Forsythe, 1%")


def mean_se(values):
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / np.sqrt(v.size))


DECREASING = "decreasing"
INCREASING = "increasing"
FLAT = "flat"


def trend_report(values, n_se=2.0):
    """Verdict on a sequence of (scale, estimate, stderr) sorted by scale.

    ``decreasing`` if every successive estimate drops by more than ``n_se``
    combined standard errors, ``increasing`` if every one rises by more,
    ``flat`` otherwise.
    """
    vals = sorted(values, key=lambda r: r[0])
    if len(vals) < 3:
        raise ValueError("trend needs at least three scales")
    steps = []
    for (_, e0, s0), (_, e1, s1) in zip(vals, vals[1:]):
        margin = n_se * np.hypot(s0, s1)
        if e1 < e0 - margin:
            steps.append(-1)
        elif e1 > e0 + margin:
            steps.append(1)
        else:
            steps.append(0)
    if all(s == -1 for s in steps):
        return DECREASING
    if all(s == 1 for s in steps):
        return INCREASING
    return FLAT
