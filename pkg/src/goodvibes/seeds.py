"""Deterministic derivation of independent RNG streams from one root seed."""

from __future__ import annotations

import hashlib
from random import Random


def derive_seed(root: int, label: str) -> int:
    """Stable 64-bit child seed for (root, label)."""
    digest = hashlib.sha256(f"{root}:{label}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def derive_rng(root: int, label: str) -> Random:
    return Random(derive_seed(root, label))
