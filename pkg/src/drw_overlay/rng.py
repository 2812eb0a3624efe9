"""Seed derivation and named random streams.

Every random decision in the artifact flows from a single 64-bit base seed.
Sub-tasks (graph placement attempts, initiator selection, individual walks,
experiment replications) get independent streams derived from the base seed
plus a label path, so results never depend on execution order or scheduling.
"""

from __future__ import annotations

import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def _encode(part) -> str:
    # Type prefix keeps 5, "5" and 5.0 from colliding.
    if isinstance(part, bool):
        return f"b:{part}"
    if isinstance(part, (int, np.integer)):
        return f"i:{int(part)}"
    if isinstance(part, float):
        return f"f:{part!r}"
    if isinstance(part, str):
        return f"s:{part}"
    raise TypeError(f"unsupported seed label type: {type(part)!r}")


def seed_material(*parts) -> int:
    """Hash a label path into a 256-bit integer suitable as SeedSequence entropy."""
    joined = "\x1f".join(_encode(p) for p in parts)
    digest = hashlib.sha256(joined.encode("utf-8")).digest()
    return int.from_bytes(digest, "big")


def derive_seed(*parts) -> int:
    """Derive a 64-bit seed from a label path (for display / CSV columns)."""
    return seed_material(*parts) & MASK64


def stream(*parts) -> np.random.Generator:
    """Independent PCG64 generator for the given label path."""
    return np.random.default_rng(np.random.SeedSequence(seed_material(*parts)))
