"""Random maxima H = max(X_1, ..., X_K) under several cluster-size policies.

The policies cover a fixed K, a K independent of the claims, and two
stopping times driven by an auxiliary sequence (W_j):

* ``GeometricStopping``: K = inf{k : X_k > W_k} with (W_j, X_j) i.i.d. pairs,
  possibly dependent within a pair.  K is geometric.
* ``FixedThreshold``: K = inf{k : X_k > W_1}, where a single W_1 sets the
  bar for the whole block.  Then H = X_K > W_1, so H is at least as heavy as
  W; with W heavier than X the mean of K is infinite.

All samplers work block-wise on one stream: the stopping rule restarts after
each block, so ``sample_blocks(..., n)`` yields n i.i.d. copies of H.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .counts import CountLaw
from .errors import CappedRealizationError, ConfigurationError

#: draws per block before a stopping time is declared runaway
ITERATION_CAP = 10**7
PREPASS_DRAWS = 10**6
PREPASS_SEED = 0x5EED


@dataclass(frozen=True)
class MaximaSample:
    h: float
    k: int
    empty: bool = False


@dataclass
class MaximaBatch:
    """Consecutive blocks drawn from one stream.

    ``h`` is -inf where the block is empty (K = 0); ``empty`` flags those.
    """

    h: np.ndarray
    k: np.ndarray
    empty: np.ndarray

    def __len__(self):
        return len(self.h)

    def __iter__(self):
        for h, k, e in zip(self.h, self.k, self.empty):
            yield MaximaSample(float(h), int(k), bool(e))

    def __getitem__(self, i):
        return MaximaSample(float(self.h[i]), int(self.k[i]), bool(self.empty[i]))

    @property
    def ends(self):
        """Block end indices T(1), T(2), ... in the underlying draw sequence."""
        return np.cumsum(self.k)

    @property
    def first_block_length(self):
        return int(self.k[0])


def _block_maxima(x, k):
    """Split ``x`` into consecutive blocks of lengths ``k`` and take maxima."""
    k = np.asarray(k, dtype=np.int64)
    h = np.full(k.shape, -np.inf)
    nonempty = k > 0
    if nonempty.any():
        starts = np.concatenate(([0], np.cumsum(k)[:-1]))[nonempty]
        h[nonempty] = np.maximum.reduceat(x, starts)
    return MaximaBatch(h=h, k=k, empty=~nonempty)


@dataclass(frozen=True)
class Deterministic:
    k: int
    kind = "deterministic"

    def __post_init__(self):
        if self.k < 0:
            raise ConfigurationError("deterministic cluster size must be >= 0")

    def mean_size(self, marks=None):
        return float(self.k)

    def sample_blocks(self, marks, n_blocks, rng):
        k = np.full(n_blocks, self.k, dtype=np.int64)
        x = marks.sample_claims(rng, int(k.sum()))
        return _block_maxima(x, k)


@dataclass(frozen=True)
class IndependentCount:
    """K drawn from ``law`` independently of the claims."""

    law: CountLaw
    cap: Optional[int] = ITERATION_CAP
    kind = "independent"

    def mean_size(self, marks=None):
        return self.law.mean()

    def sample_blocks(self, marks, n_blocks, rng):
        k = np.asarray(self.law.sample(rng, n_blocks), dtype=np.int64)
        if self.cap is not None and k.max(initial=0) > self.cap:
            bad = int(np.argmax(k))
            raise CappedRealizationError(
                f"cluster size {k[bad]} exceeds cap {self.cap}",
                partial={"block": bad, "k": int(k[bad])},
            )
        x = marks.sample_claims(rng, int(k.sum()))
        return _block_maxima(x, k)


COUPLINGS = ("independent", "comonotone", "shift")


@dataclass(frozen=True)
class GeometricStopping:
    """K = inf{k : X_k > W_k} over i.i.d. pairs (W_j, X_j).

    ``coupling`` fixes the dependence inside a pair:

    * ``independent``: W ~ ``w_law`` independent of X.
    * ``comonotone``: W and the mark share one uniform through their quantile
      functions (identity claims only).
    * ``shift``: W = X + D with D ~ Normal(shift, shift_scale) independent of X.
    """

    w_law: object = None
    coupling: str = "independent"
    shift: float = 0.0
    shift_scale: float = 1.0
    cap: Optional[int] = ITERATION_CAP
    kind = "geometric-stopping"

    def __post_init__(self):
        if self.coupling not in COUPLINGS:
            raise ConfigurationError(f"unknown coupling {self.coupling!r}")
        if self.coupling != "shift" and self.w_law is None:
            raise ConfigurationError(f"coupling {self.coupling!r} needs a law for W")
        if self.coupling == "shift" and not self.shift_scale > 0:
            raise ConfigurationError("shift_scale must be positive")

    def draw_pairs(self, marks, rng, size):
        """Draw ``size`` pairs; returns (w, x) with x the claims."""
        if self.coupling == "independent":
            x = marks.sample_claims(rng, size)
            w = self.w_law.sample(rng, size)
        elif self.coupling == "comonotone":
            u = rng.random(size)
            x = marks.claims(marks.law.ppf(u))
            w = self.w_law.ppf(u)
        else:
            x = marks.sample_claims(rng, size)
            w = x + rng.normal(self.shift, self.shift_scale, size)
        return w, x

    def success_probability(self, marks):
        """P(X > W): closed form where available, else a fixed-seed pre-pass."""
        if self.coupling == "shift":
            return float(stats.norm.cdf(-self.shift / self.shift_scale))
        if (self.coupling == "independent" and marks.claim is None
                and self.w_law == marks.law):
            return 0.5
        rng = np.random.default_rng(PREPASS_SEED)
        w, x = self.draw_pairs(marks, rng, PREPASS_DRAWS)
        return float(np.mean(x > w))

    def mean_size(self, marks):
        p = self.success_probability(marks)
        if p <= 0:
            raise ConfigurationError("P(X > W) is zero; the stopping time never fires")
        return 1.0 / p

    def sample_blocks(self, marks, n_blocks, rng):
        xs, hits = [], []
        found = 0
        drawn_since_hit = 0
        chunk = max(1024, 2 * n_blocks)
        while found < n_blocks:
            w, x = self.draw_pairs(marks, rng, chunk)
            hit = x > w
            xs.append(x)
            hits.append(hit)
            n_hit = int(hit.sum())
            found += n_hit
            if n_hit:
                drawn_since_hit = chunk - 1 - int(np.flatnonzero(hit)[-1])
            else:
                drawn_since_hit += chunk
            if self.cap is not None and drawn_since_hit > self.cap:
                raise CappedRealizationError(
                    f"stopping time not reached within {self.cap} draws",
                    partial={"completed_blocks": found, "draws": drawn_since_hit},
                )
            # adapt the chunk to the observed hit rate
            rate = max(found, 1) / sum(len(a) for a in xs)
            chunk = int(min(max(1024, 1.2 * (n_blocks - found) / rate), 1 << 24))
        x = np.concatenate(xs)
        hit = np.concatenate(hits)
        ends = np.flatnonzero(hit)[:n_blocks] + 1
        k = np.diff(np.concatenate(([0], ends)))
        return _block_maxima(x[: ends[-1]], k)


@dataclass(frozen=True)
class FixedThreshold:
    """K = inf{k : X_k > W_1} with W independent of the claims.

    Only X_K matters for the maximum, and given W_1 = w it is distributed as
    X conditioned on X > w while K is geometric with success probability
    P(X > w).  Blocks are drawn from these two laws directly, so a heavy W
    costs O(1) per block; a K beyond ``cap`` still raises.  Identity claims
    only.
    """

    w_law: object
    cap: Optional[int] = ITERATION_CAP
    kind = "fixed-threshold"

    def mean_size(self, marks):
        rng = np.random.default_rng(PREPASS_SEED)
        w = self.w_law.sample(rng, PREPASS_DRAWS)
        with np.errstate(divide="ignore"):
            return float(np.mean(1.0 / marks.law.sf(w)))

    def sample_blocks(self, marks, n_blocks, rng):
        if marks.claim is not None:
            raise ConfigurationError("FixedThreshold needs identity claims")
        w = self.w_law.sample(rng, n_blocks)
        p = marks.law.sf(w)
        u = 1.0 - rng.random(n_blocks)
        with np.errstate(divide="ignore"):
            k = np.where(p >= 1.0, 1.0, np.floor(np.log(u) / np.log1p(-p)) + 1.0)
        too_long = (~np.isfinite(k)) | (k > (self.cap if self.cap is not None else np.inf))
        if np.any(~np.isfinite(k)) or (self.cap is not None and np.any(too_long)):
            bad = int(np.argmax(too_long))
            raise CappedRealizationError(
                f"threshold {w[bad]:.4g} not exceeded within {self.cap} draws",
                partial={"block": bad, "threshold": float(w[bad])},
            )
        h = marks.law.sample_above(rng, w)
        # uncapped K can exceed int64; saturate, only the count is affected
        k = np.minimum(k, float(2**62)).astype(np.int64)
        return MaximaBatch(h=h, k=k, empty=np.zeros(n_blocks, bool))


def sample_h(policy, marks, rng):
    """One draw of (H, K)."""
    return policy.sample_blocks(marks, 1, rng)[0]


def sample_blocks(policy, marks, n_blocks, rng):
    if n_blocks < 1:
        raise ValueError("n_blocks must be positive")
    return policy.sample_blocks(marks, n_blocks, rng)


@dataclass(frozen=True)
class TailRatio:
    """Monte Carlo estimate of n * P(H > c_n x + d_n)."""

    n: float
    x: float
    estimate: float
    stderr: float
    exceedances: int
    replications: int


def tail_ratio(policy, marks, adj, n, x, n_replications, rng, batch=10**6):
    """Estimate n * P(H > c_n x + d_n) with a binomial standard error.

    ``x`` may be a sequence; one :class:`TailRatio` is returned per value.
    Empty maxima count as non-exceedances.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    levels = adj.c(n) * xs + adj.d(n)
    hits = np.zeros(xs.size, dtype=np.int64)
    done = 0
    while done < n_replications:
        m = min(batch, n_replications - done)
        h = policy.sample_blocks(marks, m, rng).h
        hits += (h[:, None] > levels[None, :]).sum(axis=0)
        done += m
    p = hits / n_replications
    out = [
        TailRatio(float(n), float(xv), float(n * pv),
                  float(n * np.sqrt(pv * (1 - pv) / n_replications)),
                  int(hv), int(n_replications))
        for xv, pv, hv in zip(xs, p, hits)
    ]
    return out if np.ndim(x) else out[0]


def exact_tail_ratio(law, n, x):
    """n * P(X > a_n x + b_n) in closed form for a shipped law."""
    seq, _ = law.sequences()
    return n * law.sf(seq.a(n) * np.asarray(x, dtype=float) + seq.b(n))
