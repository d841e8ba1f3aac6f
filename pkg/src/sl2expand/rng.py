"""Seeded counter-based random streams.

Every stream is ``Philox`` keyed by a ``SeedSequence`` built from the user seed
plus a tuple of stream tags, so independent experiments never share draws.
"""

from __future__ import annotations

import zlib

import numpy as np

RNG_ID = "numpy.Philox4x64-10"


def _tag_word(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag) & 0xFFFFFFFF
    return zlib.crc32(str(tag).encode())


def make_rng(seed: int, *tags) -> np.random.Generator:
    words = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [_tag_word(t) for t in tags]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))
