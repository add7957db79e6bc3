"""Depth fields: 2-D metric depth grids with a validity mask.

Invalid pixels carry NaN in ``values`` and False in ``valid``; the two
representations are kept consistent at construction. Computation happens
in float64, serialization (see :mod:`depthsr.pfm`) in float32.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError


@dataclass(frozen=True)
class DepthField:
    """A row-major grid of real values plus a boolean validity mask."""

    values: np.ndarray
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise DataError(f"depth field must be a non-empty 2-D grid, got shape {values.shape}")
        if self.valid is None:
            valid = np.isfinite(values)
        else:
            valid = np.asarray(self.valid, dtype=bool)
            if valid.shape != values.shape:
                raise DataError(f"mask shape {valid.shape} does not match values shape {values.shape}")
        if not np.all(np.isfinite(values[valid])):
            raise DataError("valid pixels must hold finite values")
        values = values.copy()
        values[~valid] = np.nan
        valid = valid.copy()
        values.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]

    @property
    def valid_count(self) -> int:
        return int(self.valid.sum())

    def all_valid(self) -> bool:
        return bool(self.valid.all())

    def with_values(self, values: np.ndarray, valid: np.ndarray | None = None) -> "DepthField":
        """New field with the same shape; mask defaults to the current one."""
        return DepthField(values, self.valid if valid is None else valid)


def constant_field(shape: tuple[int, int], value: float) -> DepthField:
    return DepthField(np.full(shape, float(value)))
