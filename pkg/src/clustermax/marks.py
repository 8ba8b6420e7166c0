"""Parametric mark laws and the mark model used by every simulator.

One law is shipped per max-domain of attraction, each with normalization
sequences for which ``n * P(X > a_n x + b_n)`` equals the limit tail measure
exactly once ``a_n x + b_n`` lies in the tail region:

=================  =====================  ==========================
law                sequences              limit
=================  =====================  ==========================
Pareto(alpha)      a_n = n**(1/alpha)     Fréchet(alpha)
                   b_n = 0
Exponential(rate)  a_n = 1/rate           Gumbel
                   b_n = log(n)/rate
Uniform(0, theta)  a_n = theta/n          Weibull(1)
                   b_n = theta
=================  =====================  ==========================
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError
from .evt import ExtremeValueFamily, NormalizationSequences


@dataclass(frozen=True)
class Pareto:
    """P(X > x) = x**-alpha for x >= 1."""

    alpha: float
    name = "pareto"

    def __post_init__(self):
        if not self.alpha > 0:
            raise ConfigurationError("Pareto alpha must be positive")

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 1, np.maximum(x, 1.0) ** -self.alpha, 1.0)

    def cdf(self, x):
        return 1.0 - self.sf(x)

    def ppf(self, q):
        return (1.0 - np.asarray(q, dtype=float)) ** (-1.0 / self.alpha)

    def sample(self, rng, size=None):
        # 1 - U lies in (0, 1], so the draw is always finite
        return (1.0 - rng.random(size)) ** (-1.0 / self.alpha)

    def sample_above(self, rng, level, size=None):
        """Draw from the law of X given X > level."""
        base = np.maximum(np.asarray(level, dtype=float), 1.0)
        return base * self.sample(rng, size if size is not None else base.shape or None)

    def mean(self):
        return self.alpha / (self.alpha - 1.0) if self.alpha > 1 else np.inf

    def sequences(self):
        inv = 1.0 / self.alpha
        seq = NormalizationSequences(
            a=lambda n: np.asarray(n, dtype=float) ** inv,
            b=lambda n: np.zeros_like(np.asarray(n, dtype=float)),
        )
        return seq, ExtremeValueFamily.frechet(self.alpha)


@dataclass(frozen=True)
class Exponential:
    rate: float = 1.0
    name = "exponential"

    def __post_init__(self):
        if not self.rate > 0:
            raise ConfigurationError("exponential rate must be positive")

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-self.rate * np.maximum(x, 0.0))

    def cdf(self, x):
        return 1.0 - self.sf(x)

    def ppf(self, q):
        return -np.log1p(-np.asarray(q, dtype=float)) / self.rate

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def sample_above(self, rng, level, size=None):
        base = np.maximum(np.asarray(level, dtype=float), 0.0)
        return base + self.sample(rng, size if size is not None else base.shape or None)

    def mean(self):
        return 1.0 / self.rate

    def sequences(self):
        lam = self.rate
        seq = NormalizationSequences(
            a=lambda n: np.full_like(np.asarray(n, dtype=float), 1.0 / lam),
            b=lambda n: np.log(np.asarray(n, dtype=float)) / lam,
        )
        return seq, ExtremeValueFamily.gumbel()


@dataclass(frozen=True)
class Uniform:
    """Uniform(0, theta)."""

    theta: float = 1.0
    name = "uniform"

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigurationError("uniform upper endpoint must be positive")

    def sf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip(1.0 - x / self.theta, 0.0, 1.0)

    def cdf(self, x):
        return 1.0 - self.sf(x)

    def ppf(self, q):
        return self.theta * np.asarray(q, dtype=float)

    def sample(self, rng, size=None):
        return self.theta * rng.random(size)

    def sample_above(self, rng, level, size=None):
        lo = np.clip(np.asarray(level, dtype=float), 0.0, self.theta)
        if np.any(lo >= self.theta):
            raise ConfigurationError("conditioning level at or above the uniform endpoint")
        u = rng.random(size if size is not None else lo.shape or None)
        return lo + (self.theta - lo) * u

    def mean(self):
        return self.theta / 2.0

    def sequences(self):
        theta = self.theta
        seq = NormalizationSequences(
            a=lambda n: theta / np.asarray(n, dtype=float),
            b=lambda n: np.full_like(np.asarray(n, dtype=float), theta),
        )
        return seq, ExtremeValueFamily.weibull(1.0)


FAMILIES = {"pareto": Pareto, "exponential": Exponential, "uniform": Uniform}


def make_law(name, **params):
    try:
        cls = FAMILIES[name]
    except KeyError:
        raise ConfigurationError(f"unknown mark family {name!r}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {name}: {exc}") from None


def standard_sequences(law):
    """Return ``(NormalizationSequences, ExtremeValueFamily)`` for a shipped law.

    ``law`` is a law instance or a ``(name, params)`` pair.
    """
    if isinstance(law, tuple):
        law = make_law(law[0], **law[1])
    if not hasattr(law, "sequences"):
        raise ConfigurationError(f"no normalization sequences known for {law!r}")
    return law.sequences()


@dataclass(frozen=True)
class MarkModel:
    """Mark law on the mark space plus the claim function f.

    With the default identity claim function, the claims are the marks and
    the sequences come from the law.  A custom ``claim`` must come with its
    own ``sequences`` and ``limit`` if extreme-value checks are wanted.
    """

    law: object
    claim: Optional[Callable] = None
    sequences_override: Optional[NormalizationSequences] = field(default=None, compare=False)
    limit_override: Optional[ExtremeValueFamily] = None

    def sample(self, rng, size=None):
        return self.law.sample(rng, size)

    def claims(self, marks):
        if self.claim is None:
            return marks
        return np.asarray(self.claim(marks), dtype=float)

    def sample_claims(self, rng, size=None):
        return self.claims(self.sample(rng, size))

    def sequences(self):
        if self.sequences_override is not None:
            if self.limit_override is None:
                raise ConfigurationError("custom sequences need a limit family")
            return self.sequences_override, self.limit_override
        if self.claim is not None:
            raise ConfigurationError("custom claim function needs explicit sequences")
        return self.law.sequences()

    def claim_sf(self, x):
        """Survival function of the claim X = f(A) (identity claims only)."""
        if self.claim is not None:
            raise ConfigurationError("claim survival function unknown for custom f")
        return self.law.sf(x)

    def claim_cdf(self, x):
        return 1.0 - self.claim_sf(x)


class MarkWeight:
    """Nonnegative weight g on marks with E[g(A)] = 1.

    Used to let a cluster size or a fertility scale with the ancestral mark.
    A weight built without a closed-form mean is checked against the mark law
    by a fixed-seed pre-pass of ``PREPASS_DRAWS`` draws.
    """

    PREPASS_DRAWS = 10**6
    TOLERANCE = 1e-3

    def __init__(self, fn=None, name="custom", closed_form=False):
        self.fn = fn
        self.name = name
        self.closed_form = closed_form

    @classmethod
    def constant(cls):
        return cls(None, "constant", closed_form=True)

    @classmethod
    def linear(cls, law):
        """g(a) = a / E[A]; needs a finite mark mean."""
        m = law.mean()
        if not np.isfinite(m) or m <= 0:
            raise ConfigurationError("linear mark weight needs a finite positive mark mean")
        return cls(lambda a: np.asarray(a, dtype=float) / m, "linear", closed_form=True)

    def __call__(self, marks):
        if self.fn is None:
            return np.ones(np.shape(marks))
        return np.asarray(self.fn(marks), dtype=float)

    def __eq__(self, other):
        return (isinstance(other, MarkWeight) and self.name == other.name
                and self.fn is other.fn)

    def __hash__(self):
        return hash(self.name)

    def __repr__(self):
        return f"MarkWeight({self.name})"

    def validate(self, law, seed=0x5EED):
        if self.closed_form:
            return 1.0
        rng = np.random.default_rng(seed)
        g = self(law.sample(rng, self.PREPASS_DRAWS))
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ConfigurationError(f"mark weight {self.name} must be finite and nonnegative")
        mean = float(g.mean())
        if abs(mean - 1.0) > self.TOLERANCE:
            raise ConfigurationError(
                f"mark weight {self.name} has mean {mean:.5f}, expected 1 within {self.TOLERANCE}")
        return mean
