"""Seeded random streams.

Every random quantity in the library comes from a numpy ``Generator`` backed
by the PCG64 bit generator. A stream is identified by a 64-bit base seed plus
a tuple of integer role tags; the pair is fed to ``numpy.random.SeedSequence``
so that streams with different roles are statistically independent and a
change in one role (say, the noise level) never perturbs another (say, the
input trajectory).

Gaussian variates use numpy's ``standard_normal`` (ziggurat method) and
uniform variates use ``random``; both are deterministic functions of the
bit stream for a fixed numpy release.
"""
from __future__ import annotations

import numpy as np

SEED_MASK = (1 << 64) - 1

# Role tags. Values are arbitrary but frozen: changing them changes every stream.
FEATURES = 0x5EED_0001
MODEL = 0x5EED_0002
INPUTS = 0x5EED_0003
NOISE = 0x5EED_0004
AUX = 0x5EED_0005
RUN = 0x5EED_0006


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if seed < 0 or seed > SEED_MASK:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def make_rng(seed: int, *roles: int) -> np.random.Generator:
    """Return the generator for stream ``(seed, *roles)``."""
    entropy = [check_seed(seed), *(int(r) & SEED_MASK for r in roles)]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def derive_seed(seed: int, *roles: int) -> int:
    """Derive a child 64-bit seed from ``seed`` and role tags."""
    entropy = [check_seed(seed), *(int(r) & SEED_MASK for r in roles)]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return (int(state[0]) << 32) | int(state[1])
