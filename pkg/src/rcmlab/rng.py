"""Counter-based random streams.

Every random quantity in the library is derived from a 64-bit key by the
SplitMix64 finalizer, so outcomes depend only on ``(master_seed, path)`` and
never on evaluation order or the number of worker processes.

The mix is defined bit-exactly (all arithmetic modulo 2**64)::

    splitmix64(x):
        z = x + 0x9E3779B97F4A7C15
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB
        return z ^ (z >> 31)

    fold(h, w) = splitmix64(h ^ splitmix64(w))          # w taken mod 2**64
    root(master_seed) = fold(ROOT_SALT, master_seed)
    substream(key, w1, ..., wk) = fold(...fold(fold(key, w1), w2)..., wk)
    unit(h) = (h >> 11) * 2**-53                          # uniform in [0, 1)

Pair coins for edges use ``unit(fold(fold(graph_key, min_id), max_id))``.
NumPy generators for bulk sampling are seeded with ``PCG64(key)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
ROOT_SALT = 0x5EED5EED5EED5EED
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def fold(h: int, w: int) -> int:
    return splitmix64((int(h) ^ splitmix64(int(w) & MASK64)) & MASK64)


def unit(h: int) -> float:
    return (h >> 11) * (1.0 / 9007199254740992.0)


def splitmix64_array(x):
    """Vectorized :func:`splitmix64` over a ``uint64`` array."""
    z = np.asarray(x, dtype=np.uint64) + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def fold_array(h, w):
    """Vectorized :func:`fold`; ``w`` may hold negative int64 values."""
    w = np.asarray(w)
    if w.dtype != np.uint64:
        w = w.astype(np.int64).view(np.uint64)
    h = np.asarray(h, dtype=np.uint64)
    return splitmix64_array(h ^ splitmix64_array(w))


def unit_array(h):
    return (np.asarray(h, dtype=np.uint64) >> np.uint64(11)).astype(np.float64) * (
        1.0 / 9007199254740992.0)


@dataclass(frozen=True)
class Stream:
    """An addressable node in the tree of random substreams."""

    key: int

    @classmethod
    def root(cls, master_seed: int) -> "Stream":
        return cls(fold(ROOT_SALT, int(master_seed)))

    def child(self, *words: int) -> "Stream":
        h = self.key
        for w in words:
            h = fold(h, int(w))
        return Stream(h)

    def uniform(self, *words: int) -> float:
        return unit(self.child(*words).key)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.key))


def tag(name: str) -> int:
    """Stable 64-bit word for a textual stream label."""
    h = ROOT_SALT
    for b in name.encode():
        h = fold(h, b)
    return h


def as_stream(stream) -> Stream:
    if isinstance(stream, Stream):
        return stream
    return Stream.root(int(stream))
