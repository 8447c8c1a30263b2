"""Seed-stream derivation.

All randomness descends from one master seed. Each consumer asks for a named
stream; the stream seed is ``SeedSequence([master, crc32(name), *extra])``
so adding a new consumer never perturbs existing ones.

Streams in use: ``shapes.random``, ``shapes.bases``, ``world.geometry``,
``ratings``, ``ratings.calibration``, ``embedder``, ``folds``,
``forest.<label>``, ``election``, ``explain``.
"""

from __future__ import annotations

import zlib

import numpy as np


def seed_sequence(master: int, stream: str, *extra: int) -> np.random.SeedSequence:
    if master < 0:
        raise ValueError("seeds must be non-negative")
    tag = zlib.crc32(stream.encode("utf-8"))
    return np.random.SeedSequence([int(master), tag, *(int(e) for e in extra)])


def derive_seed(master: int, stream: str, *extra: int) -> int:
    """A 63-bit integer seed for the named stream."""
    state = seed_sequence(master, stream, *extra).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1])) & ((1 << 63) - 1)


def rng_for(master: int, stream: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng(seed_sequence(master, stream, *extra))
