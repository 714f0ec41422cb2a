"""Seeded randomness for the whole pipeline.

One pinned generator is used everywhere: NumPy's PCG64, obtained through
``numpy.random.default_rng``. Seeds compose as
``SeedSequence([global_seed, crc32(tag_1), crc32(tag_2), ...])`` so every
randomized component draws from its own stream while staying reproducible,
bit for bit, across platforms for a given global seed.
"""

from __future__ import annotations

import zlib

import numpy as np


def component_rng(seed: int, *tags: str) -> np.random.Generator:
    """Return a PCG64 generator for one (seed, component-tag) combination."""
    entropy = [int(seed)] + [zlib.crc32(tag.encode("utf-8")) for tag in tags]
    return np.random.default_rng(np.random.SeedSequence(entropy))
