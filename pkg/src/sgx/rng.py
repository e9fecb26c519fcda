"""Counter-based random numbers for reproducible trajectory sampling.

Every draw is a pure function of ``(seed, particle, ordinal)``, so the same
particle sees the same randomness no matter how trajectories are batched or
which worker thread handles it.  The construction is two chained SplitMix64
steps: the (seed, ordinal) pair derives a stream key, and the particle index
selects an element of that stream.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 2.0 ** -53


def _mix64(z: int) -> int:
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def stream_key(seed: int, ordinal: int) -> int:
    """64-bit key of the (seed, ordinal) substream."""
    return _mix64((seed + _GAMMA * (ordinal + 1)) & _MASK)


def counter_uniform(seed: int, particle: int, ordinal: int) -> float:
    """Uniform float in [0, 1) for one (seed, particle, ordinal) triple."""
    bits = _mix64((stream_key(seed, ordinal) + _GAMMA * (particle + 1)) & _MASK)
    return (bits >> 11) * _INV_2_53


def counter_uniforms(seed: int, particles: np.ndarray, ordinal: int) -> np.ndarray:
    """Vectorized ``counter_uniform`` over an array of particle indices."""
    key = np.uint64(stream_key(seed, ordinal))
    gamma = np.uint64(_GAMMA)
    ids = particles.astype(np.uint64, copy=False)
    z = key + (ids + np.uint64(1)) * gamma
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53
