"""Counter-based random number generation with named substreams.

Reproducibility across worker counts and platforms requires that the i-th
draw of a parameter be a pure function of (master seed, parameter name, i),
so scenario ranges can be sharded arbitrarily.  The platform RNGs are all
sequential, so we use a small counter-based scheme built on the splitmix64
finalizer.  The full state update, so other implementations can reproduce
the streams bit for bit:

    MASK   = 2^64 - 1                      # all arithmetic modulo 2^64
    GOLDEN = 0x9E3779B97F4A7C15

    mix64(z):
        z = (z XOR (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z XOR (z >> 27)) * 0x94D049BB133111EB
        return z XOR (z >> 31)

    stream_key(seed, name) = mix64((seed + GOLDEN) mod 2^64) XOR fnv1a64(utf8(name))
    raw(key, i)            = mix64((key + (i + 1) * GOLDEN) mod 2^64)
    uniform(key, i)        = (raw(key, i) >> 11) * 2^-53      # in [0, 1)

fnv1a64 is the standard 64-bit FNV-1a hash.  raw(key, .) is exactly the
splitmix64 output sequence seeded at ``key``, which passes BigCrush; using
a hashed per-name key selects a far-apart starting state per substream.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def fnv1a64(text: str) -> int:
    """64-bit FNV-1a over the UTF-8 encoding of text."""
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h ^= byte
        h = (h * _FNV_PRIME) & MASK64
    return h


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, name: str) -> int:
    """Substream key for one named parameter under one master seed."""
    return mix64((seed + GOLDEN) & MASK64) ^ fnv1a64(name)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_MIX1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


def raw_block(key: int, start: int, count: int) -> np.ndarray:
    """Raw 64-bit outputs for counters start .. start+count-1 (uint64)."""
    idx = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = np.uint64(key) + idx * np.uint64(GOLDEN)
        return _mix64_array(state)


def uniform_block(key: int, start: int, count: int) -> np.ndarray:
    """Uniforms in [0, 1) for counters start .. start+count-1 (float64)."""
    raw = raw_block(key, start, count)
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


class RandomStream:
    """Sequential view over one substream; draws are indexable and cheap.

    Streams are value-independent: two streams with the same (seed, name)
    produce identical draws regardless of how either has been consumed.
    """

    def __init__(self, seed: int, name: str):
        self.seed = seed
        self.name = name
        self.key = stream_key(seed, name)
        self._cursor = 0

    def uniform_at(self, index: int) -> float:
        return float(uniform_block(self.key, index, 1)[0])

    def next_uniform(self) -> float:
        u = self.uniform_at(self._cursor)
        self._cursor += 1
        return u

    def uniforms(self, start: int, count: int) -> np.ndarray:
        return uniform_block(self.key, start, count)
