"""Counter-based random streams.

Every random draw in caimbench comes from a generator keyed by the master seed
plus a tuple of integers naming what is being drawn (identity, sample, fold,
epoch, ...). Streams therefore never depend on the order in which work is done.
"""

import zlib

import numpy as np


def derive_seed(seed: int, name: str) -> int:
    """Stable 32-bit sub-seed for a named component."""
    sequence = np.random.SeedSequence([seed, zlib.crc32(name.encode("utf-8"))])
    return int(sequence.generate_state(1)[0])


def counter_rng(seed: int, *counters: int) -> np.random.Generator:
    """Independent generator for the stream identified by (seed, *counters)."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, *counters])))
