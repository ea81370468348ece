"""Seed derivation.

Every random consumer draws from its own numpy stream derived from the
experiment seed, so e.g. enabling PARA never perturbs the sampled cell
profiles. Trial ``i`` of a multi-trial run uses ``trial_seed(seed, i)``.
"""
import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

PROFILE_STREAM = 1
ADJACENCY_STREAM = 2
CONTROLLER_STREAM = 3
WORKLOAD_STREAM = 4


def splitmix64(x: int) -> int:
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def trial_seed(seed: int, index: int) -> int:
    """Seed for trial ``index``: splitmix64 of seed + index * golden ratio."""
    return splitmix64((seed + index * GOLDEN) & MASK64)


def stream(seed: int, stream_id: int) -> np.random.Generator:
    return np.random.default_rng([seed & MASK64, stream_id])


def controller_rng(seed: int) -> np.random.Generator:
    return stream(seed, CONTROLLER_STREAM)
