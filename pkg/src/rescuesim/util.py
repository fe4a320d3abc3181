"""Small shared helpers."""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - a) % TWO_PI


def wrap_angles(a: np.ndarray) -> np.ndarray:
    """Vectorized wrap to (-pi, pi]."""
    return np.pi - (np.pi - np.asarray(a)) % TWO_PI


def substream(seed: int, *path: int) -> np.random.Generator:
    """Derive an independent, reproducible RNG stream from a master seed.

    The same (seed, path) always yields the same stream, so per-subsystem
    draws stay stable no matter how often other subsystems consume
    randomness.
    """
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *path]))
