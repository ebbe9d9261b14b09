"""Named random sub-streams derived from one master seed."""
import zlib

import numpy as np

MASK64 = (1 << 64) - 1


def _seed_sequence(seed: int, name: str) -> np.random.SeedSequence:
    if not 0 <= int(seed) <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.SeedSequence(int(seed), spawn_key=(zlib.crc32(name.encode()),))


def substream_seed(seed: int, name: str) -> int:
    """64-bit seed for the sub-stream ``name`` (e.g. "environment", "walk")."""
    return int(_seed_sequence(seed, name).generate_state(1, np.uint64)[0])


def substream(seed: int, name: str) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(_seed_sequence(seed, name)))
