"""Seed derivation for independent, reproducible random streams.

Every random stream in the package comes from ``make_rng(seed)``, where
``seed`` is either user supplied or derived with :func:`derive_seed`.
The mixing function is numpy's ``SeedSequence`` hash applied to the entropy
tuple ``(master_seed, crc32(label), *indices)``; the first 64-bit word of
its generated state is the derived seed.  The label keeps streams of
different experiments apart even when they share a master seed.
"""

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, label: str, *indices: int) -> int:
    """Return a 64-bit seed for stream ``indices`` of experiment ``label``."""
    entropy = [int(master_seed) & _MASK64, zlib.crc32(label.encode("utf-8"))]
    entropy.extend(int(i) for i in indices)
    ss = np.random.SeedSequence(entropy)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    """Philox (counter-based) generator for ``seed``."""
    return np.random.Generator(np.random.Philox(int(seed) & _MASK64))
