"""Named, splittable, deterministic random streams.

Every stochastic step in the package draws from a generator obtained here, so
a single 64-bit seed plus a stream name fully determines the output.  PCG64
streams are stable across platforms for a given numpy release, which is what
makes byte-identical artifacts reproducible.
"""

from __future__ import annotations

import zlib

import numpy as np

MAX_SEED = 2**64 - 1


def check_seed(seed: int) -> int:
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {type(seed).__name__}")
    if not 0 <= seed <= MAX_SEED:
        raise ValueError(f"seed must be in [0, 2**64 - 1], got {seed}")
    return seed


def substream(seed: int, name: str) -> np.random.Generator:
    """Generator for the (seed, name) pair, independent of all other names."""
    check_seed(seed)
    ss = np.random.SeedSequence([seed, zlib.crc32(name.encode("utf-8"))])
    return np.random.Generator(np.random.PCG64(ss))
