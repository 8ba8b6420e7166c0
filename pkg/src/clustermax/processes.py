"""Marked renewal cluster processes on [0, t].

A parent renewal process (Gamma_i, A_i) spawns, at every arrival, a finite
cluster of offspring at offsets T_{i,j} >= 0 with i.i.d. marks.  Two cluster
mechanisms are provided here (the Hawkes cascade lives in ``hawkes``):

* mixed binomial (Neyman-Scott): offspring at i.i.d. offsets V_{i,j};
* renewal (Bartlett-Lewis): offspring at partial sums V_{i,1} + ... + V_{i,j}.

``simulate_process`` returns the running maximum M(t), the maximum over the
first tau(t) complete clusters, the leftover maximum and count (points whose
ancestor arrived by t but which arrive after t) and the first-passage index
tau(t).
"""

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .counts import CountLaw
from .errors import CappedRealizationError, ConfigurationError
from .marks import MarkWeight
from .maxima import ITERATION_CAP

PARENT_CHUNK = 1 << 16


# -- parent process ---------------------------------------------------------

@dataclass(frozen=True)
class ParentProcess:
    """Renewal parent with mean inter-arrival 1/nu.

    ``law`` is ``exponential`` (Poisson parents), ``deterministic`` (Y = 1/nu)
    or ``gamma`` with the given ``shape`` and mean 1/nu.
    """

    nu: float = 1.0
    law: str = "exponential"
    shape: float = 1.0

    def __post_init__(self):
        if not (self.nu > 0 and np.isfinite(self.nu)):
            raise ConfigurationError("parent rate nu must be positive and finite")
        if self.law not in ("exponential", "deterministic", "gamma"):
            raise ConfigurationError(f"unknown inter-arrival law {self.law!r}")
        if self.law == "gamma" and not self.shape > 0:
            raise ConfigurationError("gamma shape must be positive")

    def inter_arrivals(self, rng, size):
        mean = 1.0 / self.nu
        if self.law == "exponential":
            return rng.exponential(mean, size)
        if self.law == "deterministic":
            return np.full(size, mean)
        return rng.gamma(self.shape, mean / self.shape, size)


def simulate_parent(parent, horizon, marks, rng):
    """Parent arrivals up to ``horizon`` plus the first one after it.

    Returns ``(gamma, ancestral_marks)``; the last entry is the tau(t)-th
    arrival, so ``len(gamma) == tau(t)``.
    """
    if not horizon > 0:
        raise ValueError("horizon must be positive")
    expected = parent.nu * horizon
    chunk = int(expected + 6 * np.sqrt(expected) + 16)
    pieces = []
    last = 0.0
    while last <= horizon:
        g = last + np.cumsum(parent.inter_arrivals(rng, chunk))
        pieces.append(g)
        last = g[-1]
        chunk = max(16, chunk // 4)
    gamma = np.concatenate(pieces)
    tau = int(np.searchsorted(gamma, horizon, side="right")) + 1
    gamma = gamma[:tau]
    return gamma, marks.sample(rng, tau)


# -- offset laws ------------------------------------------------------------

@dataclass(frozen=True)
class ExponentialOffsets:
    """V ~ Exponential(theta * r(A_0)); ``weight`` r defaults to 1."""

    theta: float = 1.0
    weight: Optional[MarkWeight] = None

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigurationError("offset rate theta must be positive")

    def rates(self, owner_marks):
        if self.weight is None:
            return self.theta
        r = self.theta * self.weight(owner_marks)
        if np.any(r <= 0):
            raise ConfigurationError("mark-scaled offset rate must be positive")
        return r

    def sample(self, rng, size, owner_marks=None):
        e = rng.standard_exponential(size)
        if self.weight is None or owner_marks is None:
            return e / self.theta
        return e / self.rates(owner_marks)

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0, self.theta * np.exp(-self.theta * np.maximum(s, 0)), 0.0)

    def sf(self, s):
        return np.exp(-self.theta * np.maximum(np.asarray(s, dtype=float), 0.0))

    def mean(self):
        return 1.0 / self.theta

    @property
    def light_tailed(self):
        return True


@dataclass(frozen=True)
class LomaxOffsets:
    """P(V > s) = (1 + s)**-beta, s >= 0; heavy-tailed delays."""

    beta: float

    def __post_init__(self):
        if not self.beta > 0:
            raise ConfigurationError("Lomax offset index beta must be positive")

    def sample(self, rng, size, owner_marks=None):
        return (1.0 - rng.random(size)) ** (-1.0 / self.beta) - 1.0

    def pdf(self, s):
        s = np.asarray(s, dtype=float)
        return np.where(s >= 0, self.beta * (1.0 + np.maximum(s, 0)) ** (-self.beta - 1.0), 0.0)

    def sf(self, s):
        return (1.0 + np.maximum(np.asarray(s, dtype=float), 0.0)) ** -self.beta

    def mean(self):
        return 1.0 / (self.beta - 1.0) if self.beta > 1 else np.inf

    @property
    def light_tailed(self):
        return False


# -- cluster sizes ----------------------------------------------------------

@dataclass(frozen=True)
class MarkPoissonSize:
    """K | A_0 ~ Poisson(mu * g(A_0)) with E[g(A)] = 1."""

    mu: float
    weight: MarkWeight

    def sample(self, rng, size, ancestral_marks):
        return rng.poisson(self.mu * self.weight(ancestral_marks))

    def mean(self):
        return self.mu


def _sample_sizes(size_law, rng, ancestral_marks):
    n = len(ancestral_marks)
    if isinstance(size_law, CountLaw):
        k = size_law.sample(rng, n)
    else:
        k = size_law.sample(rng, n, ancestral_marks)
    k = np.asarray(k, dtype=np.int64)
    if k.size and k.max() > ITERATION_CAP:
        bad = int(np.argmax(k))
        raise CappedRealizationError(
            f"cluster size {k[bad]} exceeds cap {ITERATION_CAP}",
            partial={"cluster": bad, "k": int(k[bad])},
        )
    return k


MIXED_BINOMIAL = "mixed-binomial"
RENEWAL = "renewal"


@dataclass(frozen=True)
class ClusterMechanism:
    """Offspring sizes from ``size`` and offsets from ``offsets``.

    ``size`` is a :class:`CountLaw` (independent of the marks) or a
    :class:`MarkPoissonSize`.  For the renewal mechanism the offset law gives
    the increments between consecutive offspring.
    """

    kind: str
    size: object
    offsets: object

    def __post_init__(self):
        if self.kind not in (MIXED_BINOMIAL, RENEWAL):
            raise ConfigurationError(f"unknown cluster mechanism {self.kind!r}")

    def mean_cluster_size(self, marks=None):
        return 1.0 + self.size.mean()

    def sample_offspring(self, rng, ancestral_marks, marks):
        """Offspring for a batch of ancestors.

        Returns ``(owner, offsets, marks)``: ``owner[j]`` indexes the
        ancestor, offspring of one ancestor are contiguous.
        """
        k = _sample_sizes(self.size, rng, ancestral_marks)
        owner = np.repeat(np.arange(len(k)), k)
        total = owner.size
        v = self.offsets.sample(rng, total, ancestral_marks[owner])
        if self.kind == RENEWAL and total:
            cs = np.cumsum(v)
            before = np.concatenate(([0.0], cs))[np.cumsum(k) - k]
            v = cs - np.repeat(before, k)
        return owner, v, marks.sample(rng, total)


def mixed_binomial(size, offsets):
    return ClusterMechanism(MIXED_BINOMIAL, size, offsets)


def renewal_cluster(size, offsets):
    return ClusterMechanism(RENEWAL, size, offsets)


def simulate_cluster(mech, ancestral_mark, marks, rng):
    """One cluster as a list of (offset, mark), ancestor first."""
    anc = np.array([ancestral_mark], dtype=float)
    _, off, mk = mech.sample_offspring(rng, anc, marks)
    return [(0.0, float(ancestral_mark))] + list(zip(off.tolist(), mk.tolist()))


# -- realizations -----------------------------------------------------------

@dataclass
class ProcessRealization:
    """One realization of N on [0, t] with cluster bookkeeping.

    Maxima over empty sets are -inf and carry an explicit ``*_empty`` flag.
    Point arrays are ordered by arrival time, ties in generation order; they
    are ``None`` in streaming mode, where only the overhang is kept.
    """

    horizon: float
    m_t: float
    m_empty: bool
    m_tau: float
    h_tau: float
    leftover: float
    leftover_empty: bool
    j_t: int
    tau_t: int
    n_points: int
    times: Optional[np.ndarray] = None
    claims: Optional[np.ndarray] = None
    cluster: Optional[np.ndarray] = None
    is_ancestor: Optional[np.ndarray] = None
    overhang_times: Optional[np.ndarray] = None
    overhang_claims: Optional[np.ndarray] = None

    def decomposition_holds(self):
        return self.m_tau == max(self.m_t, self.h_tau, self.leftover)


def simulate_process(parent, mech, marks, horizon, rng, keep_points=True,
                     check=True):
    """Simulate the marked cluster process on [0, horizon].

    The cluster of the first parent after the horizon is generated in full so
    that H_{tau(t)} is available; later parents are never generated.  With
    ``keep_points=False`` parents are processed in chunks and only running
    maxima and the overhang points are retained.
    """
    gamma, anc_marks = simulate_parent(parent, horizon, marks, rng)
    tau = len(gamma)
    anc_claims = marks.claims(anc_marks)

    m_t = -np.inf
    m_tau = -np.inf
    leftover = -np.inf
    j_t = 0
    n_points = 0
    kept = [] if keep_points else None
    over_t, over_c = [], []
    h_tau = -np.inf

    for lo in range(0, tau, PARENT_CHUNK):
        hi = min(lo + PARENT_CHUNK, tau)
        g = gamma[lo:hi]
        owner, off, off_marks = mech.sample_offspring(rng, anc_marks[lo:hi], marks)
        off_times = g[owner] + off
        off_claims = marks.claims(off_marks)
        owner_global = owner + lo
        anc_c = anc_claims[lo:hi]

        # ancestors up to the horizon are exactly the first tau - 1 parents
        early = owner_global < tau - 1
        arrived = early & (off_times <= horizon)
        late = early & ~arrived
        n_anc_in = min(hi, tau - 1) - lo

        cand = [m_t]
        if n_anc_in > 0:
            cand.append(anc_c[:n_anc_in].max())
        if arrived.any():
            cand.append(off_claims[arrived].max())
        m_t = max(cand)
        if late.any():
            leftover = max(leftover, off_claims[late].max())
            j_t += int(late.sum())
            over_t.append(off_times[late])
            over_c.append(off_claims[late])
        m_tau = max(m_tau, anc_c.max(), off_claims.max(initial=-np.inf))
        n_points += n_anc_in + int(arrived.sum())
        if hi == tau:
            h_tau = max(anc_c[-1], off_claims[owner_global == tau - 1].max(initial=-np.inf))
        if keep_points:
            kept.append((g, anc_marks[lo:hi], anc_c, np.arange(lo, hi),
                         off_times, off_claims, owner_global))

    real = ProcessRealization(
        horizon=float(horizon), m_t=float(m_t), m_empty=bool(m_t == -np.inf),
        m_tau=float(m_tau), h_tau=float(h_tau), leftover=float(leftover),
        leftover_empty=j_t == 0, j_t=j_t, tau_t=tau, n_points=n_points,
        overhang_times=np.concatenate(over_t) if over_t else np.empty(0),
        overhang_claims=np.concatenate(over_c) if over_c else np.empty(0),
    )
    if keep_points:
        _attach_points(real, kept)
    if check and not real.decomposition_holds():
        raise AssertionError("M^tau(t) != M(t) v H_tau(t) v eps_t")
    return real


def _attach_points(real, kept):
    times = np.concatenate([np.concatenate((k[0], k[4])) for k in kept])
    claims = np.concatenate([np.concatenate((k[2], k[5])) for k in kept])
    cluster = np.concatenate([np.concatenate((k[3], k[6])) for k in kept])
    is_anc = np.concatenate([
        np.concatenate((np.ones(len(k[0]), bool), np.zeros(len(k[4]), bool))) for k in kept
    ])
    order = np.argsort(times, kind="stable")
    real.times = times[order]
    real.claims = claims[order]
    real.cluster = cluster[order]
    real.is_ancestor = is_anc[order]


def leftover_count(real):
    """Recount J_t from the stored points."""
    if real.times is None:
        raise ValueError("realization was simulated without points")
    t = real.horizon
    anc_time = np.full(real.tau_t, np.inf)
    anc_time[real.cluster[real.is_ancestor]] = real.times[real.is_ancestor]
    parent_in = anc_time[real.cluster] <= t
    return int(np.count_nonzero(parent_in & (real.times > t)))


def write_realization_csv(real, path):
    """Dump points as CSV: arrivalTime, claim, clusterId, isAncestor."""
    if real.times is None:
        raise ValueError("realization was simulated without points")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["arrivalTime", "claim", "clusterId", "isAncestor"])
        for row in zip(real.times.tolist(), real.claims.tolist(),
                       real.cluster.tolist(), real.is_ancestor.tolist()):
            w.writerow([repr(row[0]), repr(row[1]), row[2], int(row[3])])


def read_realization_csv(path):
    """Inverse of :func:`write_realization_csv`; returns a dict of arrays."""
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["arrivalTime", "claim", "clusterId", "isAncestor"]:
            raise ValueError(f"unexpected header {header}")
        rows = list(r)
    return {
        "arrivalTime": np.array([float(x[0]) for x in rows]),
        "claim": np.array([float(x[1]) for x in rows]),
        "clusterId": np.array([int(x[2]) for x in rows], dtype=np.int64),
        "isAncestor": np.array([x[3] == "1" for x in rows]),
    }


def expected_leftover_mixed_binomial(nu, mu, theta, horizon):
    """E[J_t] for Poisson(nu) parents, K ~ Poisson(mu), V ~ Exp(theta).

    Integrating nu * mu * P(V > x) over [0, t] gives
    nu * mu * (1 - exp(-theta t)) / theta.
    """
    return nu * mu * -np.expm1(-theta * horizon) / theta
