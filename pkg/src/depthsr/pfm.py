"""Grayscale portable float map I/O.

Layout: header token ``Pf``, an ASCII ``width height`` line, a scale line
whose sign encodes endianness (negative = little-endian, the only form
written or accepted), then raw 32-bit floats in bottom-to-top row order.
Invalid pixels are stored as quiet NaNs, so write∘read is the identity at
32-bit precision including the mask.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError
from .fields import DepthField


class PFMError(DataError):
    """Malformed or unsupported PFM content."""


def write_pfm(path, field: DepthField) -> None:
    data = field.values.astype(np.float32)
    data[~field.valid] = np.nan
    header = f"Pf\n{field.width} {field.height}\n-1.0000\n".encode("ascii")
    payload = np.flipud(data).astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def _read_token(fh) -> bytes:
    """Next whitespace-delimited token."""
    token = b""
    while True:
        ch = fh.read(1)
        if not ch:
            if token:
                return token
            raise PFMError("unexpected end of file in header")
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def read_pfm(path) -> DepthField:
    with open(path, "rb") as fh:
        magic = _read_token(fh)
        if magic == b"PF":
            raise PFMError("3-channel PFM not supported; expected grayscale 'Pf'")
        if magic != b"Pf":
            raise PFMError(f"not a PFM file (header {magic!r})")
        try:
            width = int(_read_token(fh))
            height = int(_read_token(fh))
            scale = float(_read_token(fh))
        except ValueError as exc:
            raise PFMError(f"malformed PFM header: {exc}") from None
        if width <= 0 or height <= 0:
            raise PFMError(f"invalid dimensions {width}x{height}")
        if scale > 0:
            raise PFMError("big-endian PFM (positive scale) not supported")
        if scale == 0:
            raise PFMError("scale must be non-zero")
        expected = width * height * 4
        payload = fh.read(expected)
        if len(payload) != expected:
            raise PFMError(f"truncated payload: got {len(payload)} of {expected} bytes")
    data = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    values = np.flipud(data).astype(np.float64)
    return DepthField(values, np.isfinite(values))
