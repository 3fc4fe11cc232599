"""Named random substreams derived from one 64-bit seed.

Every randomized subroutine receives its own ``numpy.random.Generator`` keyed
by ``(seed, *names)`` so that adding draws in one subsystem never shifts the
draws of another.
"""

import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def _key(name):
    if isinstance(name, (int, np.integer)):
        return int(name) & 0xFFFFFFFF
    return zlib.crc32(str(name).encode())


def substream(seed, *names):
    """Generator for the substream ``names`` of ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & MASK64, spawn_key=tuple(_key(n) for n in names))
    return np.random.default_rng(ss)


def child_seed(seed, *names):
    """A 64-bit integer seed for the substream ``names`` of ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & MASK64, spawn_key=tuple(_key(n) for n in names))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def as_seed(rng_or_seed):
    """Accept a Generator or an int and return an int seed."""
    if isinstance(rng_or_seed, np.random.Generator):
        return int(rng_or_seed.integers(0, 2**63 - 1))
    return int(rng_or_seed)


def as_generator(rng_or_seed):
    if isinstance(rng_or_seed, np.random.Generator):
        return rng_or_seed
    return np.random.default_rng(int(rng_or_seed) & MASK64)
