"""Input validation helpers used across the estimator and the pipeline."""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .fields import DepthField


def as_float_array(x, name: str = "array") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.size == 0:
        raise DataError(f"{name} is empty")
    return arr


def check_finite(x, name: str = "array") -> np.ndarray:
    arr = as_float_array(x, name)
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite entries")
    return arr


def as_values(x, name: str = "field") -> np.ndarray:
    """Accept a DepthField or a bare 2-D array; return the value grid."""
    if isinstance(x, DepthField):
        return x.values
    arr = as_float_array(x, name)
    if arr.ndim != 2:
        raise DataError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "fields") -> None:
    if a.shape != b.shape:
        raise DataError(f"{what} have mismatched shapes {a.shape} vs {b.shape}")


def check_positive_depth(field: DepthField, name: str = "depth") -> DepthField:
    vals = field.values[field.valid]
    if vals.size and vals.min() <= 0:
        raise DataError(f"{name} has non-positive valid pixels")
    return field


def check_scene_pairs(X: Sequence, name: str = "X") -> list[tuple[DepthField, DepthField]]:
    """Validate a sequence of (guide, degraded input) pairs for the estimator."""
    pairs = []
    for i, item in enumerate(X):
        try:
            guide, d_in = item
        except (TypeError, ValueError):
            raise DataError(f"{name}[{i}] is not a (guide, input) pair") from None
        if not isinstance(guide, DepthField):
            guide = DepthField(as_values(guide, f"{name}[{i}] guide"))
        if not isinstance(d_in, DepthField):
            d_in = DepthField(np.asarray(d_in, dtype=np.float64))
        if d_in.valid_count == 0:
            raise DataError(f"{name}[{i}] input has no valid pixels")
        pairs.append((guide, d_in))
    return pairs


def check_fields(y: Iterable, name: str = "y") -> list[DepthField]:
    out = []
    for i, item in enumerate(y):
        if not isinstance(item, DepthField):
            item = DepthField(as_values(item, f"{name}[{i}]"))
        out.append(item)
    return out
