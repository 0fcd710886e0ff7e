"""Named, reproducible random streams derived from a single master seed.

Every stochastic work unit (a dataset row, a simulation trial, a training run)
owns a stream keyed by a purpose tag plus integer indices, so results do not
depend on the order in which units execute.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["stream", "spawn_key"]


def spawn_key(tag: str, *indices: int) -> tuple[int, ...]:
    """Stable integer key for a purpose tag and optional work-unit indices."""
    return (zlib.crc32(tag.encode("utf-8")),) + tuple(int(i) for i in indices)


def stream(master_seed: int, tag: str, *indices: int) -> np.random.Generator:
    """Generator for the (tag, indices) work unit under the given master seed."""
    entropy = (int(master_seed),) + spawn_key(tag, *indices)
    return np.random.default_rng(np.random.SeedSequence(entropy))
