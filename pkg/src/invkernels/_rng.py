"""Named, counter-based random streams.

Every random draw in the package goes through :func:`stream`, which keys a
Philox generator on ``(seed, tag)``.  Two calls with the same pair always
produce the same numbers, and distinct tags give independent streams, so
parallel workers never need to share generator state.
"""
import hashlib

import numpy as np


def _key(seed, tag):
    h = hashlib.sha256(f"{int(seed)}::{tag}".encode()).digest()
    return int.from_bytes(h[:16], "little")


def stream(seed, tag="default"):
    """Return a fresh ``numpy.random.Generator`` for ``(seed, tag)``."""
    return np.random.Generator(np.random.Philox(key=_key(seed, tag)))


def as_generator(seed, tag="default"):
    """Accept an int seed or an existing Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed, tag)


def child_seed(seed, tag):
    """Integer seed derived from ``(seed, tag)``, for APIs that take plain ints."""
    return _key(seed, tag) % (2**62)
