"""Seeded randomness for the whole package.

All random draws flow through a Philox counter-based 64-bit generator.
Gaussian variates use the Box-Muller transform on top of Philox uniforms,
and subset sampling uses a partial Fisher-Yates shuffle, so every draw is
reproducible from an integer seed within this implementation.

Derived seeds (for per-trial streams) come from numpy's SeedSequence with
the derivation key used as the spawn key, which keeps streams independent
and schedule-free.
"""

from __future__ import annotations

import numpy as np
from numpy.random import Generator, Philox, SeedSequence


def make_generator(seed: int) -> Generator:
    """Philox generator for the given integer seed."""
    return Generator(Philox(SeedSequence(int(seed))))


def derive_seed(root_seed: int, *key: int) -> int:
    """Deterministic 64-bit child seed for (root_seed, key) pairs."""
    words = SeedSequence(int(root_seed), spawn_key=tuple(int(k) for k in key))
    lo, hi = words.generate_state(2, np.uint32)
    return int(lo) | (int(hi) << 32)


def standard_normals(gen: Generator, shape) -> np.ndarray:
    """Standard-normal array via Box-Muller pairs."""
    shape = tuple(int(s) for s in np.atleast_1d(shape))
    n = int(np.prod(shape)) if shape else 1
    pairs = (n + 1) // 2
    # 1 - random() lies in (0, 1], keeping the log finite.
    u1 = 1.0 - gen.random(pairs)
    u2 = gen.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = 2.0 * np.pi * u2
    z = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])[:n]
    return z.reshape(shape)


def sample_without_replacement(gen: Generator, population: int, k: int) -> np.ndarray:
    """Uniform k-subset of range(population) via partial Fisher-Yates.

    Returns the selected indices sorted increasing.
    """
    if not 1 <= k <= population:
        raise ValueError(f"cannot draw {k} from a population of {population}")
    idx = np.arange(population)
    for i in range(k):
        j = i + int(gen.integers(0, population - i))
        idx[i], idx[j] = idx[j], idx[i]
    out = idx[:k]
    out.sort()
    return out
