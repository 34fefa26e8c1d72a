"""Deterministic seed derivation.

Every random stream in an experiment is keyed by a tuple of integers, so a
run's stream does not depend on which other runs executed before it.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stable_int(text: str) -> int:
    """32-bit integer digest of a string, stable across processes."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:4], "little")


def derive_seed(*keys: int) -> int:
    """Mix integer keys into one 63-bit seed."""
    ss = np.random.SeedSequence([int(k) & 0xFFFFFFFFFFFFFFFF for k in keys])
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int((int(hi) << 32 | int(lo)) & 0x7FFFFFFFFFFFFFFF)


def subset_key(indices) -> int:
    """Key for a set of source row indices (order-insensitive)."""
    idx = sorted(int(i) for i in indices)
    return stable_int(",".join(map(str, idx)) + f"|{len(idx)}")
