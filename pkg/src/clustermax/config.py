"""Experiment configuration files.

Grammar (one statement per line, ``#`` starts a comment)::

    key = value                 # top-level setting
    [section]                   # following keys belong to the section
    key = value, value, ...     # comma-separated lists where allowed

Sections are flat: no nesting beyond ``[section]``.  Every key is checked
against a schema; unknown keys, unknown sections, duplicates and sections
the chosen experiment does not use are errors carrying the line number.

Example::

    experiment = process-maxima
    replications = 10000
    master_seed = 20261019
    horizons = 1000

    [marks]
    family = pareto
    alpha = 2

    [parent]
    law = exponential
    nu = 1

    [mechanism]
    kind = mixed-binomial
    size = poisson
    mu = 1
    offsets = exponential
    theta = 1
"""

import hashlib
import json
from dataclasses import dataclass, field

from .errors import ConfigurationError

EXPERIMENTS = (
    "tail-ratio",
    "cluster-size-law",
    "hitting-time-equivalence",
    "process-maxima",
    "hawkes-cross-check",
    "leftover-trend",
)


def _u64(s):
    v = int(s, 0)
    if not 0 <= v < 1 << 64:
        raise ValueError("must be a 64-bit unsigned integer")
    return v


def _posint(s):
    v = int(s)
    if v < 1:
        raise ValueError("must be a positive integer")
    return v


def _nonnegint(s):
    v = int(s)
    if v < 0:
        raise ValueError("must be a nonnegative integer")
    return v


def _floats(s):
    return [float(x) for x in s.split(",") if x.strip()]


def _choice(*options):
    def parse(s):
        if s not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return s
    return parse


SCHEMA = {
    None: {
        "experiment": _choice(*EXPERIMENTS),
        "replications": _posint,
        "master_seed": _u64,
        "horizons": _floats,
        "output": str,
        "x": _floats,
        "draws_per_replication": _posint,
    },
    "marks": {
        "family": _choice("pareto", "exponential", "uniform"),
        "alpha": float,
        "rate": float,
        "theta": float,
    },
    "parent": {
        "law": _choice("exponential", "deterministic", "gamma"),
        "nu": float,
        "shape": float,
    },
    "mechanism": {
        "kind": _choice("mixed-binomial", "renewal", "hawkes", "none"),
        "size": _choice("fixed", "poisson", "geometric", "mark-poisson"),
        "k": _nonnegint,
        "mu": float,
        "p": float,
        "weight": _choice("constant", "linear"),
        "offsets": _choice("exponential", "lomax"),
        "theta": float,
        "beta": float,
        "offset_weight": _choice("none", "linear"),
    },
    "fertility": {
        "kernel": _choice("exponential", "power"),
        "kappa": float,
        "theta": float,
        "beta": float,
        "weight": _choice("constant", "linear"),
    },
    "policy": {
        "kind": _choice("deterministic", "independent", "geometric-stopping", "fixed-threshold"),
        "k": _nonnegint,
        "count": _choice("poisson", "geometric", "fixed"),
        "mu": float,
        "p": float,
        "coupling": _choice("independent", "comonotone", "shift"),
        "shift": float,
        "shift_scale": float,
        "w_family": _choice("pareto", "exponential", "uniform"),
        "w_alpha": float,
        "w_rate": float,
        "w_theta": float,
        "cap": _nonnegint,
        "mean_size": float,
    },
}

REQUIRED_TOP = ("experiment", "replications", "master_seed", "horizons")

SECTIONS_FOR = {
    "tail-ratio": ({"marks", "policy"}, set()),
    "cluster-size-law": ({"marks", "fertility"}, set()),
    "hitting-time-equivalence": ({"marks", "fertility"}, set()),
    "process-maxima": ({"marks", "parent", "mechanism"}, {"fertility"}),
    "hawkes-cross-check": ({"marks", "parent", "fertility"}, set()),
    "leftover-trend": ({"marks", "parent", "mechanism"}, {"fertility"}),
}


@dataclass
class ExperimentConfig:
    """Parsed configuration; ``lines`` maps (section, key) to source lines."""

    values: dict
    sections: dict
    lines: dict = field(default_factory=dict)
    source: str = "<string>"

    @property
    def experiment(self):
        return self.values["experiment"]

    @property
    def replications(self):
        return self.values["replications"]

    @property
    def master_seed(self):
        return self.values["master_seed"]

    @property
    def horizons(self):
        return self.values["horizons"]

    def section(self, name):
        return self.sections.get(name, {})

    def line_of(self, section, key=None):
        return self.lines.get((section, key)) or self.lines.get((section, None))

    def canonical(self):
        return json.dumps({"top": self.values, "sections": self.sections},
                          sort_keys=True, separators=(",", ":"))

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def parse_config(text, source="<string>"):
    values, sections, lines = {}, {}, {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigurationError(f"malformed section header {line!r}", lineno)
            name = line[1:-1].strip()
            if name not in SCHEMA:
                raise ConfigurationError(f"unknown section [{name}]", lineno)
            if name in sections:
                raise ConfigurationError(f"duplicate section [{name}]", lineno)
            sections[name] = {}
            lines[(name, None)] = lineno
            current = name
            continue
        if "=" not in line:
            raise ConfigurationError(f"expected 'key = value', got {line!r}", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        schema = SCHEMA[current]
        where = f"[{current}]" if current else "top level"
        if key not in schema:
            raise ConfigurationError(f"unknown key {key!r} at {where}", lineno)
        target = values if current is None else sections[current]
        if key in target:
            raise ConfigurationError(f"duplicate key {key!r} at {where}", lineno)
        try:
            target[key] = schema[key](val)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key!r}: {exc}", lineno) from None
        lines[(current, key)] = lineno

    eof = max(1, len(text.splitlines()))
    for key in REQUIRED_TOP:
        if key not in values:
            raise ConfigurationError(f"missing required key {key!r} (end of file)", eof)
    if not values["horizons"]:
        raise ConfigurationError("horizons must list at least one value", lines[(None, "horizons")])
    if any(h <= 0 for h in values["horizons"]):
        raise ConfigurationError("horizons must be positive", lines[(None, "horizons")])
    required, optional = SECTIONS_FOR[values["experiment"]]
    for name in sorted(required - set(sections)):
        raise ConfigurationError(f"experiment {values['experiment']} needs a [{name}] section",
                                 lines[(None, "experiment")])
    for name in sorted(set(sections) - required - optional):
        raise ConfigurationError(f"section [{name}] is not used by {values['experiment']}",
                                 lines[(name, None)])
    return ExperimentConfig(values, sections, lines, source)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read(), source=str(path))
