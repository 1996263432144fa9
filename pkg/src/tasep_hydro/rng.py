"""Seed handling: every stream is a 64-bit key derived from integer seeds."""

import numpy as np


def derive_key(*seed):
    """64-bit key from one or more non-negative integers."""
    words = []
    for s in seed:
        s = int(s)
        if s < 0:
            raise ValueError("seeds must be non-negative integers")
        words.append(s)
    return int(np.random.SeedSequence(words).generate_state(1, np.uint64)[0])


def replica_seeds(master, replica):
    """Initial-draw seed and field seed of one replica."""
    return (int(master), int(replica), 0), (int(master), int(replica), 1)


def replica_rng(master, replica):
    """Auxiliary generator of one replica (parameter draws and the like)."""
    return np.random.default_rng(np.random.SeedSequence([int(master), int(replica), 2]))
