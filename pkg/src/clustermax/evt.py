"""Extreme-value families, tail measures and normalization sequences.

Three limit laws are supported, all in standard form:

* Fréchet(alpha):  G(x) = exp(-x**-alpha) for x > 0
* Gumbel:          G(x) = exp(-exp(-x))
* Weibull(alpha):  G(x) = exp(-(-x)**alpha) for x < 0, and 1 for x >= 0

The Weibull upper endpoint sits at 0; any location shift of the underlying
mark distribution is carried by the centering sequence ``b``.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError

FRECHET = "frechet"
GUMBEL = "gumbel"
WEIBULL = "weibull"
KINDS = (FRECHET, GUMBEL, WEIBULL)


@dataclass(frozen=True)
class ExtremeValueFamily:
    kind: str
    shape: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown extreme-value family {self.kind!r}")
        if self.kind == GUMBEL:
            if self.shape is not None:
                raise ConfigurationError("Gumbel family takes no shape parameter")
        elif self.shape is None or not self.shape > 0:
            raise ConfigurationError(f"{self.kind} family needs a positive shape")

    @classmethod
    def frechet(cls, alpha):
        return cls(FRECHET, float(alpha))

    @classmethod
    def gumbel(cls):
        return cls(GUMBEL)

    @classmethod
    def weibull(cls, alpha):
        return cls(WEIBULL, float(alpha))

    def in_support(self, x):
        """Membership in E = {y : G(y) > 0}."""
        x = np.asarray(x, dtype=float)
        if self.kind == FRECHET:
            return x > 0
        # Gumbel and Weibull laws are positive on the whole line
        return x > -np.inf

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.kind == FRECHET:
                pos = np.where(x > 0, x, 1.0)
                out = np.where(x > 0, np.exp(-pos ** -self.shape), 0.0)
            elif self.kind == GUMBEL:
                out = np.exp(-np.exp(-x))
            else:
                neg = np.where(x < 0, -x, 0.0)
                out = np.where(x < 0, np.exp(-neg ** self.shape), 1.0)
        return out[()] if out.ndim == 0 else out

    def tail_measure(self, x):
        """mu_G(x, inf) = -log G(x), defined on the support E."""
        x = np.asarray(x, dtype=float)
        if not np.all(self.in_support(x)):
            raise DomainError(f"x outside the support of {self.kind}")
        if self.kind == FRECHET:
            out = x ** -self.shape
        elif self.kind == GUMBEL:
            out = np.exp(-x)
        else:
            out = np.where(x < 0, np.abs(x) ** self.shape, 0.0)
        return out[()] if np.ndim(out) == 0 else out

    def ppf(self, q):
        """Quantile function, used for plot overlays and tests."""
        q = np.asarray(q, dtype=float)
        t = -np.log(q)
        if self.kind == FRECHET:
            return t ** (-1.0 / self.shape)
        if self.kind == GUMBEL:
            return -np.log(t)
        return -(t ** (1.0 / self.shape))

    def label(self):
        if self.kind == GUMBEL:
            return "Gumbel"
        return f"{self.kind.capitalize()}({self.shape:g})"


def eval_cdf(family, x):
    return family.cdf(x)


def tail_measure(family, x):
    return family.tail_measure(x)


@dataclass(frozen=True)
class NormalizationSequences:
    """Scale ``a(n) > 0`` and center ``b(n)``, evaluated lazily in n."""

    a: Callable
    b: Callable

    def normalize(self, values, n):
        return (np.asarray(values, dtype=float) - self.b(n)) / self.a(n)


@dataclass(frozen=True)
class AdjustedSequences:
    """Cluster-adjusted sequences c(n) = a(floor(m n)), d(n) = b(floor(m n)).

    ``mean_cluster_size`` is m, the expected number of claims per cluster.
    """

    base: NormalizationSequences
    mean_cluster_size: float

    def index(self, n):
        idx = np.floor(self.mean_cluster_size * np.asarray(n, dtype=float))
        return np.maximum(idx, 1.0)

    def c(self, n):
        return self.base.a(self.index(n))

    def d(self, n):
        return self.base.b(self.index(n))

    def normalize(self, values, n):
        return (np.asarray(values, dtype=float) - self.d(n)) / self.c(n)


def adjust_sequences(seq, mean_cluster_size):
    m = float(mean_cluster_size)
    if not np.isfinite(m) or m < 1:
        raise DomainError(f"mean cluster size must be finite and >= 1, got {m}")
    return AdjustedSequences(seq, m)
