"""Deterministic sub-stream derivation from one master seed.

Every run owns a single integer seed.  All randomness consumed anywhere in a
run is drawn from named child streams of that seed, addressed by a path of
labels and indices, e.g. ``("train", 17)`` for the shuffle/dropout stream of
acquisition step 17 or ``("reinit", 17)`` for the cumulative re-initialization
at that step.  Two different paths yield statistically independent streams;
the same path always yields the same stream.

String path components are mapped to integers with CRC-32 so the spawn key
stays a plain tuple of uint32 values.
"""

from __future__ import annotations

import zlib

import numpy as np

SeedLike = int | np.random.SeedSequence

__all__ = ["SeedLike", "child_sequence", "stream"]


def _key(component: int | str) -> int:
    if isinstance(component, str):
        return zlib.crc32(component.encode("utf-8"))
    value = int(component)
    if value < 0:
        raise ValueError(f"negative path component: {component}")
    return value


def child_sequence(seed: SeedLike, *path: int | str) -> np.random.SeedSequence:
    """SeedSequence for the child stream at ``path`` under ``seed``."""
    if isinstance(seed, np.random.SeedSequence):
        base_entropy = seed.entropy
        base_key = tuple(seed.spawn_key)
    else:
        base_entropy = int(seed)
        base_key = ()
    return np.random.SeedSequence(
        entropy=base_entropy, spawn_key=base_key + tuple(_key(p) for p in path)
    )


def stream(seed: SeedLike, *path: int | str) -> np.random.Generator:
    """Generator seeded at the child stream ``path`` under ``seed``."""
    return np.random.default_rng(child_sequence(seed, *path))
