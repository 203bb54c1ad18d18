"""Deterministic RNG substream derivation.

Every random draw in the package flows through a generator produced here.
A (seed, path) pair always yields the same stream, and distinct paths give
statistically independent streams, so layers, trials, and shuffle rounds can
be sampled in parallel with reproducible output.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator addressed by (seed, path).

    Parameters
    ----------
    seed : int
        Non-negative base seed.
    path : int
        Substream coordinates (e.g. a stream tag plus a layer index).
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *path: int) -> int:
    """Return a stable 63-bit child seed for the given path.

    Used where a component needs its own base seed (per-trial instances,
    per-round shuffles) rather than a generator.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
