"""Deterministic derivation of independent random streams.

Every stream is named by (master_seed, index, purpose tag). The tag is
hashed into seed-sequence words, so streams for different agents, blocks,
checkpoints, or purposes never collide and never depend on scheduling order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream_key(index: int, tag: str) -> tuple[int, ...]:
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    words = tuple(int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4))
    return (int(index),) + words


def seed_stream(master_seed: int, index: int, tag: str) -> np.random.Generator:
    """Independent generator for (master_seed, index, tag)."""
    seq = np.random.SeedSequence(entropy=int(master_seed),
                                 spawn_key=stream_key(index, tag))
    return np.random.default_rng(seq)
