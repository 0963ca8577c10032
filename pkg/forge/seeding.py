"""
Seeded random substreams.

Every random decision is drawn from a generator keyed by a root seed plus
integer indices (epoch, batch, image, ...), so results never depend on the
order in which worker threads are scheduled.
"""

import numpy as np


def substream(seed: int, *keys: int) -> np.random.Generator:
    """
    Get a numpy random generator for the (seed, *keys) substream.

    Args:
        seed: Root seed (any non-negative integer, u64 included)
        keys: Non-negative integer indices naming the substream

    Returns:
        numpy Generator instance
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)))


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a child root seed for the (seed, *keys) substream."""
    state = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys)).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])
