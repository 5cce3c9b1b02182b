"""Seed derivation for reproducible random streams.

Every random quantity in the package descends from one integer seed.
Sub-streams are obtained by feeding ``(seed, *keys)`` to numpy's
``SeedSequence`` (``entropy=seed``, ``spawn_key=keys``) and driving a
``PCG64`` bit generator with the result. PCG64 and SeedSequence are
specified algorithms, so a seed reproduces the same stream on every
platform numpy supports.
"""

from __future__ import annotations

import numpy as np

# Stream tags; the first spawn-key element of every derived stream.
CHAIN = 0
PREDICTIVE = 1
S2 = 2
DATA = 3
THETA_TRUTH = 4
REPLICATION = 5


def generator(seed: int, *keys: int) -> np.random.Generator:
    """PCG64 generator for the sub-stream ``keys`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *keys: int) -> int:
    """A fresh 63-bit integer seed for the sub-stream ``keys`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    hi, lo = (int(w) for w in ss.generate_state(2, np.uint32))
    return ((hi << 32) | lo) & ((1 << 63) - 1)
