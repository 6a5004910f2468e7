"""Deterministic random-stream derivation.

Every stochastic routine in the package receives an integer master seed and
derives independent substreams from a structured key, e.g.
``(kernel_index, batch_index, trial_index)``.  Reports produced from the same
(config, seed, version) triple are therefore byte-identical regardless of
execution order or thread count.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_word(part: object) -> int:
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("seed key parts must be non-negative")
        return int(part)
    if isinstance(part, str):
        digest = hashlib.sha256(part.encode("utf-8")).digest()
        return int.from_bytes(digest[:4], "big")
    raise TypeError(f"unsupported seed key part: {part!r}")


def derive_rng(master_seed: int, *key: object) -> np.random.Generator:
    """Return a generator for the substream identified by ``key``."""
    words = tuple(_key_word(part) for part in key)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=words))
