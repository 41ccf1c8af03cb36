"""Deterministic random streams.

Every random draw in the package comes from a ``numpy.random.PCG64`` bit
generator seeded through ``numpy.random.SeedSequence``. A stream is named by a
base seed plus a tuple of non-negative integers (the spawn key), so streams for
different replications, sample sizes or purposes never depend on scheduling
order and never collide: ``SeedSequence`` hashes the full key.
"""

from __future__ import annotations

import numpy as np

# Domain tags keep train / eval / reference / optimizer streams apart.
DOMAINS = {
    "simulate": 0,
    "train": 1,
    "eval": 2,
    "reference": 3,
    "restart": 4,
    "variance": 5,
}

LOSS_CODES = {"absolute": 0, "squared": 1}


def stream_key(*parts) -> tuple[int, ...]:
    """Map a mix of ints and domain/loss names to an integer spawn key."""
    key = []
    for part in parts:
        if isinstance(part, str):
            if part in DOMAINS:
                key.append(DOMAINS[part])
            elif part in LOSS_CODES:
                key.append(LOSS_CODES[part])
            else:
                raise ValueError(f"unknown stream tag {part!r}")
        else:
            value = int(part)
            if value < 0:
                raise ValueError("stream key parts must be non-negative")
            key.append(value)
    return tuple(key)


def seed_sequence(seed: int, *parts) -> np.random.SeedSequence:
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    return np.random.SeedSequence(entropy=int(seed), spawn_key=stream_key(*parts))


def make_rng(seed: int, *parts) -> np.random.Generator:
    """Return a PCG64 generator for the stream ``(seed, *parts)``."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *parts)))


def derive_seed(seed: int, *parts) -> int:
    """A 64-bit integer seed for the stream, for APIs that take plain seeds."""
    words = seed_sequence(seed, *parts).generate_state(2, dtype=np.uint32)
    return int(words[0]) | (int(words[1]) << 32)
