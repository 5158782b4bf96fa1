"""Seed derivation so that independent runs never share RNG streams."""

from __future__ import annotations

import hashlib
import random

MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, *parts: object) -> int:
    """64-bit seed from ``master_seed`` and an arbitrary run identifier."""
    payload = "\x1f".join([str(int(master_seed) & MASK64), *map(str, parts)])
    return int.from_bytes(hashlib.sha256(payload.encode("utf-8")).digest()[:8], "big")


def make_rng(seed: int, *parts: object) -> random.Random:
    return random.Random(derive_seed(seed, *parts) if parts else seed)
