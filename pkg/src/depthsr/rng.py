"""Deterministic random streams derived from a single run seed.

Every stochastic draw in the pipeline flows from ``stream(seed, *labels)``:
the labels (operation id, scene id, ...) are hashed together with the seed
into a Philox key, so each operation gets an independent counter-based
stream and whole fields are drawn in one vectorized call. Results are
bit-reproducible and independent of scene evaluation order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _philox_key(seed: int, labels: tuple) -> int:
    tag = "|".join([str(int(seed))] + [str(l) for l in labels])
    digest = hashlib.sha256(tag.encode("utf-8")).digest()
    return int.from_bytes(digest[:16], "little")


def stream(seed: int, *labels) -> np.random.Generator:
    """Independent generator keyed by (seed, labels)."""
    return np.random.Generator(np.random.Philox(key=_philox_key(seed, labels)))


def normal_field(shape: tuple[int, ...], seed: int, *labels) -> np.ndarray:
    """Seeded unit-Gaussian field, drawn in a single call."""
    return stream(seed, *labels).standard_normal(shape)


def child_seed(seed: int, *labels) -> int:
    """64-bit seed for a nested component (e.g. per-scene degradation)."""
    return _philox_key(seed, labels) & 0xFFFFFFFFFFFFFFFF
