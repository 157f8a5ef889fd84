"""Deterministic seed derivation for parallel and replicated sampling.

Every stochastic routine in the package takes an integer seed and derives
independent child streams with :func:`child_rng`.  Two calls with the same
``(seed, *key)`` produce bitwise-identical streams, regardless of execution
order or thread schedule, which is what makes replication loops and bootstrap
resampling reproducible under any parallelism degree.
"""

from __future__ import annotations

import numpy as np

__all__ = ["child_rng", "derive_seed"]


def child_rng(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for the child stream addressed by ``key``.

    ``child_rng(s)`` is the root stream; ``child_rng(s, a, b)`` is the stream
    for sub-task ``(a, b)``.  Key components must be non-negative integers.
    """
    if any(k < 0 for k in key):
        raise ValueError(f"seed-derivation key must be non-negative, got {key}")
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def derive_seed(seed: int, *key: int) -> int:
    """Collapse a child stream address to a plain integer seed."""
    if any(k < 0 for k in key):
        raise ValueError(f"seed-derivation key must be non-negative, got {key}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])
