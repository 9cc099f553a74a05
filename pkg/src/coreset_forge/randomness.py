"""Deterministic random substreams keyed by a master seed and string tags."""

import zlib

import numpy as np


def _tag(tag) -> int:
    if isinstance(tag, int):
        return tag
    return zlib.crc32(str(tag).encode())


def seed_sequence(seed, *tags) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=tuple(_tag(t) for t in tags))


def substream(seed, *tags) -> np.random.Generator:
    """Generator that depends only on (seed, tags), never on call order."""
    return np.random.default_rng(seed_sequence(seed, *tags))


def derived_int(seed, *tags) -> int:
    return int(seed_sequence(seed, *tags).generate_state(1, np.uint32)[0])
