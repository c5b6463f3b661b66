"""Named, reproducible random streams derived from one master seed.

Every sampled artifact records the key of the stream that produced it, so
any draw can be reproduced in isolation.  Keys mix integers and short
strings; strings are folded to 32 bits with crc32, which is stable across
platforms and sessions.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stream_key", "seed_sequence", "stream"]


def stream_key(*parts: int | str) -> tuple[int, ...]:
    key = []
    for part in parts:
        if isinstance(part, str):
            key.append(zlib.crc32(part.encode("utf-8")))
        else:
            value = int(part)
            if value < 0:
                raise ValueError("stream key integers must be nonnegative")
            key.append(value & 0xFFFFFFFF)
    return tuple(key)


def seed_sequence(master: int, *parts: int | str) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(master), spawn_key=stream_key(*parts))


def stream(master: int, *parts: int | str) -> np.random.Generator:
    """A PCG64 generator for the (master, *parts) stream."""
    return np.random.default_rng(seed_sequence(master, *parts))
