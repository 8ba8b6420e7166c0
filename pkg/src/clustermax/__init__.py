"""Extremes of marked renewal cluster processes: simulators and checks."""

__version__ = "0.1.0"

from .errors import CappedRealizationError, ConfigurationError, DomainError
from .evt import (AdjustedSequences, ExtremeValueFamily, NormalizationSequences,
                  adjust_sequences, eval_cdf, tail_measure)
from .marks import Exponential, MarkModel, MarkWeight, Pareto, Uniform, standard_sequences
from .counts import CountLaw
from .maxima import (Deterministic, FixedThreshold, GeometricStopping, IndependentCount,
                     sample_blocks, sample_h, tail_ratio)
from .processes import (ClusterMechanism, ExponentialOffsets, LomaxOffsets, MarkPoissonSize,
                        ParentProcess, leftover_count, mixed_binomial, renewal_cluster,
                        simulate_cluster, simulate_parent, simulate_process)
from .hawkes import (FertilityModel, borel_pmf, hawkes_mechanism, hitting_time_size_law,
                     hitting_times, sample_hawkes_cluster, simulate_hawkes_by_thinning)
from .rng import derive_stream
