"""Deterministic seed derivation.

All randomness flows from a 64-bit seed plus a tuple of integer keys fed to
``numpy.random.SeedSequence``. Derived streams depend only on (seed, keys),
never on the order in which they are requested.
"""
from __future__ import annotations

import hashlib
import json

import numpy as np

MASK64 = (1 << 64) - 1


def stream(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for sub-stream ``keys`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed) & MASK64, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed, or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def derive_seed(master_seed: int, *parts) -> int:
    """Hash a master seed and JSON-serialisable parts into a 64-bit seed."""
    payload = json.dumps([int(master_seed), *parts], sort_keys=True, separators=(",", ":"))
    digest = hashlib.blake2b(payload.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")
