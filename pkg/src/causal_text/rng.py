"""Deterministic random-stream derivation.

Every stochastic component draws from a stream derived from the master seed
and a tuple of tags, so replicate r of size n is reproducible on its own and
parallel execution cannot reorder draws.  The split function is
``SeedSequence((master, tag_1, ..., tag_k))`` with string tags encoded as
little-endian bytes; it is stable across runs, platforms, and processes.
"""

from __future__ import annotations

import numpy as np


def _tag_int(tag) -> int:
    if isinstance(tag, (int, np.integer)):
        return int(tag)
    if isinstance(tag, str):
        # short ascii tags; the empty string maps to 0
        return int.from_bytes(tag.encode("utf-8"), "little")
    raise TypeError(f"stream tag must be int or str, got {type(tag).__name__}")


def derive_stream(master_seed: int, *tags) -> np.random.Generator:
    """Return the Generator for (master_seed, *tags)."""
    entropy = (int(master_seed),) + tuple(_tag_int(t) for t in tags)
    return np.random.default_rng(np.random.SeedSequence(entropy))
