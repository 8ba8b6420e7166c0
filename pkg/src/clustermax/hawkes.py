"""Marked linear Hawkes processes.

Intensity ``lambda(t) = nu + sum_{tau_i < t} h(t - tau_i, A_i)`` with a
fertility ``h(s, a) = kappa * g(a) * delay.pdf(s)``: the mark scales the
expected number of direct offspring, ``kappa_a = kappa * g(a)``, and the
delay density ``h(., a) / kappa_a`` does not depend on the mark.

Two simulators are provided and agree in law:

* branching: immigrants at rate nu, each the root of a Poisson(kappa_a)
  Galton-Watson cascade (``sample_hawkes_cluster``, ``hawkes_mechanism``);
* Ogata thinning against the left-endpoint intensity bound, valid because
  the shipped delay densities are nonincreasing.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import CappedRealizationError, ConfigurationError
from .marks import MarkWeight
from .processes import ExponentialOffsets, LomaxOffsets

GENERATION_CAP = 10**4
SIZE_CAP = 10**7
WALK_CAP = 10**7


@dataclass(frozen=True)
class FertilityModel:
    kappa: float
    delay: object
    weight: MarkWeight = MarkWeight.constant()

    def __post_init__(self):
        if not (0 <= self.kappa < 1):
            raise ConfigurationError(f"branching ratio kappa must lie in [0, 1), got {self.kappa}")
        if not isinstance(self.delay, (ExponentialOffsets, LomaxOffsets)):
            raise ConfigurationError("delay must be an exponential or Lomax kernel")
        if isinstance(self.delay, ExponentialOffsets) and self.delay.weight is not None:
            raise ConfigurationError("Hawkes delays may not depend on the mark")

    @classmethod
    def exponential(cls, kappa, theta=1.0, weight=None):
        return cls(kappa, ExponentialOffsets(theta), weight or MarkWeight.constant())

    @classmethod
    def power(cls, kappa, beta, weight=None):
        return cls(kappa, LomaxOffsets(beta), weight or MarkWeight.constant())

    def validate(self, law):
        self.weight.validate(law)
        return self

    def kappa_of(self, a):
        return self.kappa * self.weight(a)

    def h(self, s, a):
        return self.kappa_of(a) * self.delay.pdf(s)

    def waiting_density(self, s):
        """h(s, a) / kappa_a, identical for every mark."""
        return self.delay.pdf(s)

    def tail_mass(self, u, a):
        """int_u^inf h(s, a) ds."""
        return self.kappa_of(a) * self.delay.sf(u)

    def mean_cluster_size(self, marks=None):
        return 1.0 / (1.0 - self.kappa)


@dataclass
class HawkesCluster:
    """One cascade; index 0 is the ancestor with ``parent_index == -1``."""

    offsets: np.ndarray
    marks: np.ndarray
    generation: np.ndarray
    parent_index: np.ndarray

    @property
    def total_size(self):
        return len(self.offsets)

    def points(self):
        return list(zip(self.offsets.tolist(), self.marks.tolist()))


def _cascade(fert, marks, ancestral_marks, rng):
    """Branch all ancestors generation by generation.

    Returns offspring arrays ``(owner, offset, mark, generation, parent)``
    where ``parent`` indexes the concatenation [ancestors, offspring].
    """
    n_anc = len(ancestral_marks)
    cur_off = np.zeros(n_anc)
    cur_mark = np.asarray(ancestral_marks, dtype=float)
    cur_owner = np.arange(n_anc)
    cur_idx = np.arange(n_anc)
    out = []
    next_idx = n_anc
    produced = 0
    gen = 0
    while cur_owner.size:
        gen += 1
        n_kids = rng.poisson(fert.kappa_of(cur_mark))
        total = int(n_kids.sum())
        if total == 0:
            break
        if gen > GENERATION_CAP:
            raise CappedRealizationError(
                f"cascade still alive after {GENERATION_CAP} generations",
                partial={"generation": gen, "points": produced},
            )
        par = np.repeat(np.arange(cur_owner.size), n_kids)
        off = cur_off[par] + fert.delay.sample(rng, total)
        mk = marks.sample(rng, total)
        owner = cur_owner[par]
        idx = next_idx + np.arange(total)
        out.append((owner, off, mk, np.full(total, gen), cur_idx[par]))
        next_idx += total
        produced += total
        if produced > SIZE_CAP:
            sizes = np.bincount(np.concatenate([o[0] for o in out]), minlength=n_anc)
            if sizes.max() + 1 > SIZE_CAP:
                raise CappedRealizationError(
                    f"cluster size exceeds {SIZE_CAP}",
                    partial={"generation": gen, "points": int(sizes.max()) + 1},
                )
        cur_off, cur_mark, cur_owner, cur_idx = off, mk, owner, idx
    if not out:
        e = np.empty(0)
        ei = np.empty(0, dtype=np.int64)
        return ei, e, e, ei, ei
    return tuple(np.concatenate(col) for col in zip(*out))


def sample_hawkes_cluster(fert, marks, ancestral_mark, rng):
    owner, off, mk, gen, parent = _cascade(fert, marks, np.array([ancestral_mark], float), rng)
    return HawkesCluster(
        offsets=np.concatenate(([0.0], off)),
        marks=np.concatenate(([float(ancestral_mark)], mk)),
        generation=np.concatenate(([0], gen)).astype(np.int64),
        parent_index=np.concatenate(([-1], parent)).astype(np.int64),
    )


def cluster_sizes(fert, marks, n, rng):
    """Total sizes K + 1 of ``n`` independent cascades with fresh ancestors."""
    anc = marks.sample(rng, n)
    owner = _cascade(fert, marks, anc, rng)[0]
    return 1 + np.bincount(owner, minlength=n)


def hitting_times(fert, marks, n_draws, rng):
    """Draws of zeta = inf{k : S_k = 0} for S_0 = 1, S_k = S_{k-1} + L_k - 1.

    Each step uses a fresh mark A_k and L_k ~ Poisson(kappa_{A_k}).
    """
    s = np.ones(n_draws, dtype=np.int64)
    zeta = np.zeros(n_draws, dtype=np.int64)
    active = np.arange(n_draws)
    step = 0
    while active.size:
        step += 1
        if step > WALK_CAP:
            raise CappedRealizationError(
                f"random walk not absorbed within {WALK_CAP} steps",
                partial={"active": int(active.size)},
            )
        a = marks.sample(rng, active.size)
        s[active] += rng.poisson(fert.kappa_of(a)) - 1
        hit = s[active] == 0
        zeta[active[hit]] = step
        active = active[~hit]
    return zeta


def hitting_time_size_law(fert, marks, n_draws, rng, max_size=None):
    """Empirical pmf of zeta on 1..max_size (default: largest draw)."""
    z = hitting_times(fert, marks, n_draws, rng)
    top = int(z.max()) if max_size is None else int(max_size)
    counts = np.bincount(np.minimum(z, top + 1), minlength=top + 2)[1: top + 1]
    return np.arange(1, top + 1), counts / n_draws


def borel_pmf(n, kappa):
    """P(K + 1 = n) = exp(-kappa n) (kappa n)**(n-1) / n!, n >= 1."""
    from scipy.special import gammaln

    n = np.asarray(n, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if kappa == 0:
            return (n == 1).astype(float)
        logp = -kappa * n + (n - 1) * np.log(kappa * n) - gammaln(n + 1)
    return np.where(n >= 1, np.exp(logp), 0.0)


class HawkesMechanism:
    """Cluster-process adapter: flattened cascades, ancestor excluded."""

    kind = "hawkes"

    def __init__(self, fert):
        self.fert = fert

    def mean_cluster_size(self, marks=None):
        return self.fert.mean_cluster_size()

    def sample_offspring(self, rng, ancestral_marks, marks):
        owner, off, mk, _, _ = _cascade(self.fert, marks, ancestral_marks, rng)
        # keep offspring of one ancestor contiguous like the other mechanisms
        order = np.argsort(owner, kind="stable")
        return owner[order], off[order], mk[order]

    def __repr__(self):
        return f"HawkesMechanism({self.fert!r})"


def hawkes_mechanism(fert):
    return HawkesMechanism(fert)


def simulate_hawkes_by_thinning(fert, marks, nu, horizon, rng):
    """Ogata thinning; returns ``(times, marks)`` of all points in [0, horizon].

    Between events the intensity only decays, so its value just after the
    current time bounds it until the next proposal.  The exponential kernel
    keeps the excitation as a single decaying state; other kernels sum over
    the history.
    """
    if not nu > 0:
        raise ConfigurationError("immigration rate nu must be positive")
    buf = _Draws(rng)
    times, mks, weights = [], [], []
    t = 0.0
    if isinstance(fert.delay, ExponentialOffsets):
        theta = fert.delay.theta
        excite = 0.0
        while True:
            bound = nu + excite
            gap = buf.exp() / bound
            t += gap
            if t > horizon:
                break
            excite *= math.exp(-theta * gap)
            if buf.uniform() * bound <= nu + excite:
                a = float(marks.sample(rng))
                times.append(t)
                mks.append(a)
                excite += float(fert.kappa_of(a)) * theta
    else:
        delay = fert.delay
        hist_t = np.empty(0)
        hist_k = np.empty(0)
        bound = nu
        while True:
            gap = buf.exp() / bound
            t += gap
            if t > horizon:
                break
            lam = nu + float(np.dot(hist_k, delay.pdf(t - hist_t))) if hist_t.size else nu
            if buf.uniform() * bound <= lam:
                a = float(marks.sample(rng))
                times.append(t)
                mks.append(a)
                weights.append(float(fert.kappa_of(a)))
                hist_t = np.asarray(times)
                hist_k = np.asarray(weights)
                lam += weights[-1] * float(delay.pdf(0.0))
            bound = lam
    return np.asarray(times), np.asarray(mks)


class _Draws:
    """Buffered scalar draws; avoids per-call Generator overhead."""

    SIZE = 4096

    def __init__(self, rng):
        self.rng = rng
        self._e = iter(())
        self._u = iter(())

    def exp(self):
        try:
            return next(self._e)
        except StopIteration:
            self._e = iter(self.rng.standard_exponential(self.SIZE).tolist())
            return next(self._e)

    def uniform(self):
        try:
            return next(self._u)
        except StopIteration:
            self._u = iter(self.rng.random(self.SIZE).tolist())
            return next(self._u)


def write_cluster_csv(cluster, path):
    """Dump a cascade as CSV: offset, mark, generation, parentIndex."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["offset", "mark", "generation", "parentIndex"])
        for row in zip(cluster.offsets.tolist(), cluster.marks.tolist(),
                       cluster.generation.tolist(), cluster.parent_index.tolist()):
            w.writerow([repr(row[0]), repr(row[1]), row[2], row[3]])
