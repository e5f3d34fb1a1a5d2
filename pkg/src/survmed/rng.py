"""Deterministic RNG substreams keyed by integer tuples."""

from __future__ import annotations

import numpy as np


def substream(*keys: int) -> np.random.Generator:
    """Independent generator derived deterministically from integer keys.

    Identical keys give bit-identical streams on every platform, so
    replicated work keyed by (seed, replicate_index) is reproducible and
    order-independent.
    """
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))
