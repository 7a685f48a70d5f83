"""Deterministic stream derivation for seeded experiments.

Every random draw in this package comes from a generator obtained through
``substream``.  A stream is identified by a key tuple such as
``(master_seed, "data", scenario_index, replicate)``; distinct keys give
statistically independent streams and the mapping is stable across runs,
processes, and parallelism degrees.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["key_of", "substream", "derive_seed"]


def key_of(*parts) -> tuple[int, ...]:
    """Normalize a mixed key of ints and strings to a tuple of uint64 words."""
    words = []
    for part in parts:
        if isinstance(part, (int, np.integer)):
            words.append(int(part) & 0xFFFFFFFFFFFFFFFF)
        elif isinstance(part, str):
            digest = hashlib.blake2s(part.encode("utf-8"), digest_size=8).digest()
            words.append(int.from_bytes(digest, "little"))
        else:
            raise TypeError(f"stream key parts must be int or str, got {type(part)!r}")
    return tuple(words)


def substream(*parts) -> np.random.Generator:
    """Independent generator for the given key; same key, same stream."""
    return np.random.default_rng(np.random.SeedSequence(key_of(*parts)))


def derive_seed(*parts) -> int:
    """Collapse a key to a single u32 seed for libraries that want one int."""
    return int(substream(*parts).integers(0, 2**31 - 1))
