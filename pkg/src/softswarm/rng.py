"""Counter-based random streams and per-trial seed derivation.

Every stochastic component draws from a Philox generator keyed by
``(seed, stream)``, so streams are reproducible regardless of execution
order or thread count.  Stream tags keep draws for different purposes
(initialization, integration noise, Monte Carlo sampling) statistically
independent even when they share a seed.
"""

from __future__ import annotations

import numpy as np

STREAM_NOISE = 0
STREAM_INIT = 1
STREAM_SAMPLING = 2

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def make_generator(seed: int, stream: int = STREAM_NOISE) -> np.random.Generator:
    """Philox generator keyed by (seed, stream)."""
    key = np.array([seed & _M64, stream & _M64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, *indices: int) -> int:
    """Mix a master seed with sweep/run indices into a 64-bit trial seed.

    The mix is a splitmix64 chain, so appending sweep points or runs never
    reshuffles the seeds of existing trials.
    """
    h = master_seed & _M64
    for v in indices:
        h = _splitmix64(h ^ _splitmix64(v & _M64))
    return h
