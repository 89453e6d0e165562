"""Deterministic substream derivation.

Every stochastic step in the package draws from a generator derived from a
master seed plus a tuple of labels (counters, names). Results are therefore
independent of scheduling and worker count: a tree, fold or permutation gets
the same stream no matter where it runs.
"""

from __future__ import annotations

import zlib

import numpy as np

_MASK = (1 << 63) - 1


def _as_word(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part) & _MASK


def sequence(seed, *parts) -> np.random.SeedSequence:
    """Seed sequence for the substream labelled by ``parts`` under ``seed``."""
    return np.random.SeedSequence([_as_word(seed)] + [_as_word(p) for p in parts])


def substream(seed, *parts) -> np.random.Generator:
    """Generator for the substream labelled by ``parts`` under ``seed``."""
    return np.random.default_rng(sequence(seed, *parts))


def child_seed(seed, *parts) -> int:
    """A plain integer seed derived from ``seed`` and ``parts``.

    Used when an API boundary takes a seed rather than a generator.
    """
    return int(sequence(seed, *parts).generate_state(1, dtype=np.uint64)[0] & _MASK)
