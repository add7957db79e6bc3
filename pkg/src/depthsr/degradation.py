"""Synthetic degradation pipeline for depth fields.

Reproduces the benchmark recipe: bicubic downsampling, additive Gaussian
noise, Gaussian blur, random pixel removal with 3-nearest-neighbor fill,
and low-bit quantization, applied in that fixed order. Every operation is
a pure function of (field, spec) including the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .fields import DepthField
from .rng import stream


@dataclass(frozen=True)
class BlurSpec:
    kernel_size: int = 3
    sigma: float = 0.5

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ConfigError(f"blur kernel size must be odd and >= 1, got {self.kernel_size}")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ConfigError(f"blur sigma must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class DegradationSpec:
    downsample_factor: float = 1.0
    noise_sigma: float = 0.0
    blur: BlurSpec | None = None
    removal_fraction: float = 0.0
    quantization_step: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (np.isfinite(self.downsample_factor) and self.downsample_factor >= 1):
            raise ConfigError(f"downsample factor must be >= 1, got {self.downsample_factor!r}")
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ConfigError(f"noise sigma must be >= 0, got {self.noise_sigma!r}")
        if not (np.isfinite(self.removal_fraction) and 0 <= self.removal_fraction < 1):
            raise ConfigError(f"removal fraction must lie in [0, 1), got {self.removal_fraction!r}")
        if not (np.isfinite(self.quantization_step) and self.quantization_step >= 0):
            raise ConfigError(f"quantization step must be >= 0, got {self.quantization_step!r}")


def _cubic_weights(t: np.ndarray) -> np.ndarray:
    """Catmull-Rom weights (a = -0.5) for taps at offsets -1, 0, 1, 2."""
    t2 = t * t
    t3 = t2 * t
    w = np.empty((4,) + t.shape)
    w[0] = -0.5 * t3 + t2 - 0.5 * t
    w[1] = 1.5 * t3 - 2.5 * t2 + 1.0
    w[2] = -1.5 * t3 + 2.0 * t2 + 0.5 * t
    w[3] = 0.5 * t3 - 0.5 * t2
    return w


def _resample_axis(values: np.ndarray, out_len: int, axis: int) -> np.ndarray:
    """Separable Catmull-Rom resample with edge-clamped taps."""
    values = np.moveaxis(values, axis, 0)
    in_len = values.shape[0]
    src = (np.arange(out_len) + 0.5) * (in_len / out_len) - 0.5
    base = np.floor(src).astype(np.int64)
    frac = src - base
    weights = _cubic_weights(frac)
    out = np.zeros((out_len,) + values.shape[1:])
    for k in range(4):
        idx = np.clip(base + k - 1, 0, in_len - 1)
        out += weights[k].reshape((-1,) + (1,) * (values.ndim - 1)) * values[idx]
    return np.moveaxis(out, 0, axis)


def nearest_fill(values: np.ndarray, valid: np.ndarray) -> np.ndarray:
    """Replace invalid entries with the nearest valid value (scan-order ties)."""
    if valid.all():
        return values
    vy, vx = np.nonzero(valid)
    if vy.size == 0:
        raise DataError("field has no valid pixels")
    order = vy * values.shape[1] + vx
    hy, hx = np.nonzero(~valid)
    filled = values.copy()
    n_total = values.size
    d2 = (hy[:, None] - vy[None, :]).astype(np.int64) ** 2 + (
        hx[:, None] - vx[None, :]
    ).astype(np.int64) ** 2
    key = d2 * n_total + order[None, :]
    nearest = np.argmin(key, axis=1)
    filled[hy, hx] = values[vy[nearest], vx[nearest]]
    return filled


def resample_to(field: DepthField, out_shape: tuple[int, int]) -> DepthField:
    """Catmull-Rom resample to an explicit output shape.

    Invalid pixels are pre-filled with their nearest valid value so they do
    not poison the interpolation; the output mask is the nearest-neighbor
    resample of the input mask.
    """
    out_h, out_w = int(out_shape[0]), int(out_shape[1])
    if out_h < 1 or out_w < 1:
        raise DataError(f"degenerate output shape {out_shape}")
    values = nearest_fill(field.values, field.valid)
    resampled = _resample_axis(_resample_axis(values, out_h, 0), out_w, 1)
    if field.valid.all():
        valid = np.ones((out_h, out_w), dtype=bool)
    else:
        sy = np.clip(
            np.rint((np.arange(out_h) + 0.5) * (field.height / out_h) - 0.5).astype(int),
            0,
            field.height - 1,
        )
        sx = np.clip(
            np.rint((np.arange(out_w) + 0.5) * (field.width / out_w) - 0.5).astype(int),
            0,
            field.width - 1,
        )
        valid = field.valid[sy[:, None], sx[None, :]]
    resampled[~valid] = np.nan
    return DepthField(resampled, valid)


def bicubic_resample(field: DepthField, factor: float) -> DepthField:
    """Resample by a (possibly non-integer) factor; factor > 1 shrinks."""
    if not (np.isfinite(factor) and factor > 0):
        raise ConfigError(f"resample factor must be positive, got {factor!r}")
    out_h = int(round(field.height / factor))
    out_w = int(round(field.width / factor))
    if out_h < 1 or out_w < 1:
        raise DataError(f"factor {factor} collapses {field.shape} to an empty grid")
    return resample_to(field, (out_h, out_w))


def add_gaussian_noise(field: DepthField, sigma: float, seed: int) -> DepthField:
    """Seeded additive Gaussian noise on valid pixels; mask unchanged."""
    if not (np.isfinite(sigma) and sigma >= 0):
        raise ConfigError(f"noise sigma must be >= 0, got {sigma!r}")
    if sigma == 0:
        return DepthField(field.values, field.valid)
    noise = stream(seed, "noise").standard_normal(field.shape)
    values = field.values + sigma * noise
    values[~field.valid] = np.nan
    return DepthField(values, field.valid)


def _gaussian_kernel(kernel_size: int, sigma: float) -> np.ndarray:
    half = kernel_size // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _blur_axis(values: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    half = kernel.size // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (half, half)
    padded = np.pad(values, pad, mode="edge")
    out = np.zeros_like(values)
    for k in range(kernel.size):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(k, k + values.shape[axis])
        out += kernel[k] * padded[tuple(sl)]
    return out


def blur_array(values: np.ndarray, kernel_size: int, sigma: float) -> np.ndarray:
    """Separable edge-clamped Gaussian blur of a fully valid grid."""
    kernel = _gaussian_kernel(kernel_size, sigma)
    return _blur_axis(_blur_axis(values, kernel, 0), kernel, 1)


def gaussian_blur(field: DepthField, kernel_size: int, sigma: float) -> DepthField:
    """Separable normalized Gaussian convolution with edge clamp.

    Invalid pixels contribute zero weight and stay invalid; the remaining
    weights are renormalized so constants are preserved around holes.
    """
    BlurSpec(kernel_size, sigma)  # validate
    kernel = _gaussian_kernel(kernel_size, sigma)
    masked = np.where(field.valid, field.values, 0.0)
    weights = field.valid.astype(np.float64)
    num = _blur_axis(_blur_axis(masked, kernel, 0), kernel, 1)
    den = _blur_axis(_blur_axis(weights, kernel, 0), kernel, 1)
    values = np.full(field.shape, np.nan)
    ok = field.valid & (den > 0)
    values[ok] = num[ok] / den[ok]
    return DepthField(values, field.valid)


def sparsify_and_fill(field: DepthField, fraction: float, seed: int) -> DepthField:
    """Remove ⌊fraction·N⌋ valid pixels; refill each from its 3 nearest survivors.

    Nearest is Euclidean pixel distance with ties broken by row-major scan
    order; fills read surviving pixels only, never other fills.
    """
    if not (np.isfinite(fraction) and 0 <= fraction < 1):
        raise ConfigError(f"removal fraction must lie in [0, 1), got {fraction!r}")
    valid_flat = np.flatnonzero(field.valid.ravel())
    n_remove = int(math.floor(fraction * valid_flat.size))
    if n_remove == 0:
        return DepthField(field.values, field.valid)
    rng = stream(seed, "sparsify")
    removed = rng.choice(valid_flat, size=n_remove, replace=False)
    survivor_mask = field.valid.copy()
    survivor_mask.ravel()[removed] = False
    survivors = np.flatnonzero(survivor_mask.ravel())
    if survivors.size < 3:
        raise DataError(f"only {survivors.size} pixels survive removal; need >= 3")

    w = field.width
    n_total = field.values.size
    ry, rx = removed // w, removed % w
    sy, sx = survivors // w, survivors % w
    flat_values = field.values.ravel()
    filled = field.values.copy().ravel()
    # Composite key (squared distance, scan index) keeps ties deterministic.
    chunk = max(1, int(4_000_000 // max(1, survivors.size)))
    for start in range(0, removed.size, chunk):
        end = min(start + chunk, removed.size)
        d2 = (ry[start:end, None] - sy[None, :]).astype(np.int64) ** 2 + (
            rx[start:end, None] - sx[None, :]
        ).astype(np.int64) ** 2
        key = d2 * n_total + survivors[None, :]
        take = min(3, survivors.size)
        nearest = np.argpartition(key, take - 1, axis=1)[:, :take]
        # argpartition does not order the selected keys; sort the slice.
        rows = np.arange(end - start)[:, None]
        order = np.argsort(key[rows, nearest], axis=1)
        nearest = nearest[rows, order][:, :3]
        filled[removed[start:end]] = flat_values[survivors[nearest]].mean(axis=1)
    return DepthField(filled.reshape(field.shape), field.valid)


def quantize(field: DepthField, step: float) -> DepthField:
    """Round-half-to-even to the nearest multiple of step; step 0 is identity."""
    if not (np.isfinite(step) and step >= 0):
        raise ConfigError(f"quantization step must be >= 0, got {step!r}")
    if step == 0:
        return DepthField(field.values, field.valid)
    values = np.round(field.values / step) * step
    return DepthField(values, field.valid)


def apply_spec(field: DepthField, spec: DegradationSpec) -> DepthField:
    """Fixed order: downsample, noise, blur, sparsify, quantize."""
    out = field
    if spec.downsample_factor != 1.0:
        out = bicubic_resample(out, spec.downsample_factor)
    if spec.noise_sigma > 0:
        out = add_gaussian_noise(out, spec.noise_sigma, spec.seed)
    if spec.blur is not None:
        out = gaussian_blur(out, spec.blur.kernel_size, spec.blur.sigma)
    if spec.removal_fraction > 0:
        out = sparsify_and_fill(out, spec.removal_fraction, spec.seed)
    if spec.quantization_step > 0:
        out = quantize(out, spec.quantization_step)
    return out
