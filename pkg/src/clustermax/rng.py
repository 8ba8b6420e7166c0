"""Counter-based random streams keyed by (master seed, replication, horizon).

Every replication of every experiment draws from its own Philox stream.  The
128-bit Philox key is built directly from the indices, so distinct
``(master_seed, replication, horizon)`` triples map to distinct keys and the
streams are independent by construction of the counter-based generator.
"""

import numpy as np

MASK64 = (1 << 64) - 1
MAX_INDEX = 1 << 32

#: identifier written to run manifests
DERIVATION_RULE = "philox4x64-key(master,rep<<32|horizon)"


def stream_key(master_seed, replication=0, horizon=0):
    """Return the two 64-bit key words ``(high, low)`` for a stream."""
    if replication < 0 or horizon < 0:
        raise ValueError("replication and horizon indices must be nonnegative")
    if replication >= MAX_INDEX or horizon >= MAX_INDEX:
        raise ValueError("replication and horizon indices must be < 2**32")
    high = int(master_seed) & MASK64
    low = (int(replication) << 32) | int(horizon)
    return high, low


def derive_stream(master_seed, replication=0, horizon=0):
    """Return an independent ``numpy.random.Generator`` for one task."""
    high, low = stream_key(master_seed, replication, horizon)
    key = np.array([high, low], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def as_generator(rng):
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
