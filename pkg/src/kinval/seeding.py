"""Deterministic seed streams: one scene seed, many labelled children."""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, label: str) -> int:
    """64-bit child seed from a parent seed and a text label."""
    h = hashlib.blake2b(f"{int(seed)}:{label}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little")


def rng_for(seed: int, label: str) -> np.random.Generator:
    return np.random.default_rng(derive_seed(seed, label))
