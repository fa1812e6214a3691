"""Deterministic seed splitting.

All randomness in the package flows from a single integer seed.  Independent
streams are derived with :func:`derive_rng`, which feeds ``(seed, *keys)`` to
:class:`numpy.random.SeedSequence`.  String keys are hashed with CRC32 so the
mapping is stable across Python processes (``hash()`` is salted).
"""

from __future__ import annotations

import zlib

import numpy as np


def _key(k: int | str) -> int:
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    if k < 0:
        raise ValueError("stream keys must be non-negative")
    return int(k)


def derive_rng(seed: int, *keys: int | str) -> np.random.Generator:
    """Return a generator for the stream named by ``keys`` under ``seed``."""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_key(k) for k in keys]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed: int, *keys: int | str) -> int:
    """Integer child seed; handy when a callee takes a seed rather than a generator."""
    return int(derive_rng(seed, *keys).integers(0, 2**63 - 1))
