"""Counter-based SplitMix64 streams.

SplitMix64 (Steele, Lea and Flood, 2014) seeded with ``s`` emits
``mix(s + i * GAMMA)`` for ``i = 1, 2, ...``, so any output can be computed
directly from the seed and its position.  Trial ``t`` of a simulation with
seed ``s`` uses the stream whose state is the ``t``-th output of the
generator seeded with ``s``; draw ``m`` of that trial is output ``m + 1``
of its stream.  Everything is plain 64-bit integer arithmetic, so other
implementations can reproduce the draws bit for bit.

Reference vector: seed 1234567 yields 6457827717110365317,
3203168211198807973, 9817491932198370423, 4593380528125082431,
16408922859458223821.
"""
from __future__ import annotations

import numpy as np

MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * _M1) & MASK
    z = ((z ^ (z >> 27)) * _M2) & MASK
    return z ^ (z >> 31)


def splitmix64(seed: int, count: int) -> list:
    """First ``count`` outputs of SplitMix64 seeded with ``seed``."""
    return [mix64(seed + (i + 1) * GAMMA) for i in range(count)]


def mix64_array(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_M1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_M2)
    z ^= z >> np.uint64(31)
    return z


def trial_keys(seed: int, trials) -> np.ndarray:
    """Stream state of each trial index in ``trials``."""
    idx = np.asarray(trials, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64_array(np.uint64(seed & MASK) + (idx + np.uint64(1)) * np.uint64(GAMMA))


def uniforms(keys: np.ndarray, step: int) -> np.ndarray:
    """Draw number ``step`` (0-based) of each stream, as doubles in [0, 1)."""
    offset = np.uint64(((step + 1) * GAMMA) & MASK)
    with np.errstate(over="ignore"):
        bits = mix64_array(keys + offset)
    return (bits >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))
