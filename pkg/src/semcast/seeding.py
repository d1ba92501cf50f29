"""Deterministic seed derivation for experiment reproducibility.

Python's builtin hash() is salted per process, so sub-seeds are derived with
blake2b over the index tuple instead. Same inputs give the same stream on any
platform and any run.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(base: int, *indices: int) -> int:
    """Stable 64-bit sub-seed for (base, indices...)."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(base).to_bytes(16, "little", signed=True))
    for idx in indices:
        h.update(int(idx).to_bytes(16, "little", signed=True))
    return int.from_bytes(h.digest(), "little")


def rng_for(base: int, *indices: int) -> np.random.Generator:
    return np.random.default_rng(derive_seed(base, *indices))
