"""Deterministic per-stage seed derivation from one master seed."""

import hashlib


def derive_seed(master: int, stage: str) -> int:
    """64-bit seed for ``stage``, stable across runs and platforms."""
    digest = hashlib.sha256(f"{master}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "little")
