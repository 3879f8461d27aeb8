"""Counter-based random streams for reproducible replications.

Streams are derived from a master seed plus arbitrary context tokens
(study name, sample size, replication index, ...) so that adding grid
points or replications never perturbs existing draws, and concurrent
replications are statistically independent by construction.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["sequence", "rng", "rng_from"]


def _token(item) -> int:
    if isinstance(item, bool):
        raise TypeError("booleans are ambiguous seed tokens; use ints")
    if isinstance(item, (int, np.integer)):
        return int(item) & ((1 << 64) - 1)
    if isinstance(item, str):
        digest = hashlib.sha256(item.encode("utf-8")).digest()
        return int.from_bytes(digest[:8], "little")
    raise TypeError(f"cannot derive a seed token from {type(item).__name__}")


def sequence(master_seed: int, *context) -> np.random.SeedSequence:
    """SeedSequence keyed on (master_seed, *context) tokens."""
    return np.random.SeedSequence([_token(master_seed)] + [_token(c) for c in context])


def rng(master_seed: int, *context) -> np.random.Generator:
    """Philox generator for the stream keyed on (master_seed, *context)."""
    return np.random.Generator(np.random.Philox(sequence(master_seed, *context)))


def rng_from(seed) -> np.random.Generator:
    """Coerce an int, SeedSequence, or Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return rng(seed)
