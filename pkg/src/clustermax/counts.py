"""Nonnegative integer laws used for cluster sizes."""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy import stats

from .errors import ConfigurationError


@dataclass(frozen=True)
class CountLaw:
    """``poisson(mu)``, ``geometric(p)`` on {1, 2, ...}, ``fixed(k)`` or a
    ``table`` of probabilities on 0, 1, ..., len(table) - 1."""

    kind: str
    mu: float = 0.0
    p: float = 1.0
    k: int = 0
    table: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "poisson":
            if not self.mu >= 0 or not np.isfinite(self.mu):
                raise ConfigurationError("Poisson mean must be finite and nonnegative")
        elif self.kind == "geometric":
            if not 0 < self.p <= 1:
                raise ConfigurationError("geometric success probability must be in (0, 1]")
        elif self.kind == "fixed":
            if int(self.k) != self.k or self.k < 0:
                raise ConfigurationError("fixed count must be a nonnegative integer")
        elif self.kind == "table":
            t = np.asarray(self.table, dtype=float)
            if t.size == 0 or np.any(t < 0) or abs(t.sum() - 1.0) > 1e-9:
                raise ConfigurationError("count table must be a probability vector")
        else:
            raise ConfigurationError(f"unknown count law {self.kind!r}")

    @classmethod
    def poisson(cls, mu):
        return cls("poisson", mu=float(mu))

    @classmethod
    def geometric(cls, p):
        return cls("geometric", p=float(p))

    @classmethod
    def fixed(cls, k):
        return cls("fixed", k=int(k))

    @classmethod
    def from_table(cls, probs):
        return cls("table", table=tuple(float(q) for q in probs))

    def sample(self, rng, size=None):
        if self.kind == "poisson":
            return rng.poisson(self.mu, size)
        if self.kind == "geometric":
            return rng.geometric(self.p, size)
        if self.kind == "fixed":
            return np.full(size if size is not None else (), self.k, dtype=np.int64)
        t = np.asarray(self.table)
        return rng.choice(t.size, size=size, p=t)

    def mean(self):
        if self.kind == "poisson":
            return self.mu
        if self.kind == "geometric":
            return 1.0 / self.p
        if self.kind == "fixed":
            return float(self.k)
        t = np.asarray(self.table)
        return float(np.dot(np.arange(t.size), t))

    def pmf(self, n):
        n = np.asarray(n)
        if self.kind == "poisson":
            return stats.poisson.pmf(n, self.mu)
        if self.kind == "geometric":
            return stats.geom.pmf(n, self.p)
        if self.kind == "fixed":
            return (n == self.k).astype(float)
        t = np.asarray(self.table)
        inside = (n >= 0) & (n < t.size)
        return np.where(inside, t[np.clip(n, 0, t.size - 1)], 0.0)


def count_law_from(kind, **params):
    builders = {
        "poisson": lambda mu: CountLaw.poisson(mu),
        "geometric": lambda p: CountLaw.geometric(p),
        "fixed": lambda k: CountLaw.fixed(k),
        "table": lambda table: CountLaw.from_table(table),
    }
    if kind not in builders:
        raise ConfigurationError(f"unknown count law {kind!r}")
    try:
        return builders[kind](**params)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for count law {kind}: {exc}") from None
