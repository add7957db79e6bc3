"""Calibration stage: refined estimate plus per-pixel uncertainty.

The refiner is a joint-bilateral upsampler guided by the high-resolution
intensity field; the uncertainty map is a windowed absolute-residual
statistic between the refined estimate and a plain bicubic upsample,
scaled by √(π/2) (mean absolute deviation → standard deviation under a
Gaussian residual) and by a corpus-fitted scalar, then floored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .fields import DepthField
from .degradation import nearest_fill, resample_to
from .validation import as_values, check_same_shape

SIGMA_FLOOR = 1e-3

_MAD_TO_STD = math.sqrt(math.pi / 2.0)

# Scale search bounds for the uncertainty calibration factor.
_SCALE_LO = 1e-3
_SCALE_HI = 1e3


@dataclass(frozen=True)
class CalibrationOutput:
    z0_hat: DepthField
    sigma0_map: np.ndarray
    sigma_bar: float
    raw_stat: np.ndarray  # unscaled residual statistic, kept for scale fitting

    def __post_init__(self):
        if not self.z0_hat.all_valid():
            raise DataError("refined estimate must have no invalid pixels")
        if np.any(self.sigma0_map < SIGMA_FLOOR) or not np.all(np.isfinite(self.sigma0_map)):
            raise DataError("sigma map must be finite and floored")
        if abs(self.sigma_bar - float(self.sigma0_map.mean())) > 1e-12:
            raise DataError("sigma_bar inconsistent with sigma map")


def _box_mean(values: np.ndarray, k: int) -> np.ndarray:
    """(2k+1)² windowed mean normalized by the in-bounds window size."""
    h, w = values.shape
    padded = np.zeros((h + 1, w + 1))
    padded[1:, 1:] = np.cumsum(np.cumsum(values, axis=0), axis=1)
    y0 = np.clip(np.arange(h) - k, 0, h)
    y1 = np.clip(np.arange(h) + k + 1, 0, h)
    x0 = np.clip(np.arange(w) - k, 0, w)
    x1 = np.clip(np.arange(w) + k + 1, 0, w)
    total = (
        padded[y1[:, None], x1[None, :]]
        - padded[y0[:, None], x1[None, :]]
        - padded[y1[:, None], x0[None, :]]
        + padded[y0[:, None], x0[None, :]]
    )
    count = (y1 - y0)[:, None] * (x1 - x0)[None, :]
    return total / count


def _nearest_valid_value(d_lr: np.ndarray, valid: np.ndarray) -> float:
    vals = d_lr[valid]
    if vals.size == 0:
        raise DataError("input has no valid pixels")
    return float(vals[0])


def _joint_bilateral_upsample(
    guide: np.ndarray, d_lr: np.ndarray, valid_lr: np.ndarray, guide_lr: np.ndarray
) -> np.ndarray:
    out_h, out_w = guide.shape
    in_h, in_w = d_lr.shape
    fy, fx = out_h / in_h, out_w / in_w
    # Range kernel width: 10% of the guide's dynamic range.
    sigma_r = max(0.1 * float(guide.max() - guide.min()), 1e-6)
    radius = 2  # window of +-2 source pixels around the nearest cell

    ys = np.arange(out_h)
    xs = np.arange(out_w)
    by = np.rint((ys + 0.5) / fy - 0.5).astype(np.int64)
    bx = np.rint((xs + 0.5) / fx - 0.5).astype(np.int64)

    num = np.zeros((out_h, out_w))
    den = np.zeros((out_h, out_w))
    d_safe = np.where(valid_lr, d_lr, 0.0)
    for dy in range(-radius, radius + 1):
        qy = by + dy
        iny = (qy >= 0) & (qy < in_h)
        qyc = np.clip(qy, 0, in_h - 1)
        # Source-cell center position in output coordinates.
        py = (qy + 0.5) * fy - 0.5
        wy = np.exp(-((ys - py) ** 2) / (2.0 * fy * fy)) * iny
        for dx in range(-radius, radius + 1):
            qx = bx + dx
            inx = (qx >= 0) & (qx < in_w)
            qxc = np.clip(qx, 0, in_w - 1)
            px = (qx + 0.5) * fx - 0.5
            wx = np.exp(-((xs - px) ** 2) / (2.0 * fx * fx)) * inx
            spatial = wy[:, None] * wx[None, :]
            g_src = guide_lr[qyc[:, None], qxc[None, :]]
            range_w = np.exp(-((guide - g_src) ** 2) / (2.0 * sigma_r * sigma_r))
            w = spatial * range_w * valid_lr[qyc[:, None], qxc[None, :]]
            num += w * d_safe[qyc[:, None], qxc[None, :]]
            den += w
    out = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
    holes = den <= 0
    if holes.any():
        out[holes] = _nearest_valid_value(d_lr, valid_lr)
    return out


def calibrate(
    guide, d_in: DepthField, *, sigma_scale: float = 1.0, out_shape: tuple[int, int] | None = None
) -> CalibrationOutput:
    """Refine a degraded low-resolution field against a high-resolution guide.

    Returns the refined estimate, the floored per-pixel standard deviation
    map, its spatial mean, and the unscaled residual statistic.
    """
    guide_values = as_values(guide, "guide")
    if out_shape is None:
        out_shape = guide_values.shape
    if guide_values.shape != tuple(out_shape):
        raise DataError(f"guide shape {guide_values.shape} does not match target {out_shape}")
    if d_in.valid_count == 0:
        raise DataError("degraded input has no valid pixels")
    out_h, out_w = guide_values.shape
    fy, fx = out_h / d_in.height, out_w / d_in.width

    filled = nearest_fill(d_in.values, d_in.valid)
    bicubic_up = resample_to(DepthField(filled), (out_h, out_w)).values
    if (d_in.height, d_in.width) == (out_h, out_w):
        # Already at target resolution: refinement is a pass-through with
        # holes filled from valid neighbors.
        z0 = filled.copy()
    else:
        guide_lr = resample_to(DepthField(guide_values), d_in.shape).values
        z0 = _joint_bilateral_upsample(guide_values, d_in.values, d_in.valid, guide_lr)

    residual = np.abs(z0 - bicubic_up)
    k = max(1, math.ceil(max(fy, fx) / 2.0))
    raw = _box_mean(residual, k) * _MAD_TO_STD
    sigma0 = np.maximum(sigma_scale * raw, SIGMA_FLOOR)
    return CalibrationOutput(
        z0_hat=DepthField(z0),
        sigma0_map=sigma0,
        sigma_bar=float(sigma0.mean()),
        raw_stat=raw,
    )


def nll_loss(z0_hat, sigma0_map: np.ndarray, z_gt) -> float:
    """Mean per-pixel Gaussian negative log-likelihood: log σ² + r²/σ²."""
    z0 = as_values(z0_hat, "z0_hat")
    gt = as_values(z_gt, "z_gt")
    sigma = np.asarray(sigma0_map, dtype=np.float64)
    check_same_shape(z0, gt, "estimate/truth")
    check_same_shape(z0, sigma, "estimate/sigma")
    if np.any(sigma <= 0):
        raise DataError("sigma map must be strictly positive")
    var = sigma * sigma
    return float(np.mean(np.log(var) + (z0 - gt) ** 2 / var))


def l_d_loss(d_hat, d_gt, valid: np.ndarray) -> float:
    """Mean absolute error over valid pixels."""
    pred = as_values(d_hat, "d_hat")
    gt = as_values(d_gt, "d_gt")
    check_same_shape(pred, gt, "prediction/truth")
    valid = np.asarray(valid, dtype=bool)
    if not valid.any():
        raise DataError("validity mask selects no pixels")
    return float(np.mean(np.abs(pred[valid] - gt[valid])))


def _golden_section_min(f, lo: float, hi: float, iterations: int = 200) -> float:
    """Golden-section minimizer; plateau ties resolve toward the lower bound."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iterations):
        if hi - lo < 1e-12:
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
    return (lo + hi) / 2.0


def fit_sigma_scale(corpus) -> float:
    """Scalar c minimizing mean NLL with σ = max(c·raw, floor) over a corpus.

    The corpus is a sequence of (z0_hat, raw statistic, z_gt) triples;
    the search runs over log c in [log 1e-3, log 1e3].
    """
    entries = [
        (as_values(z0, "z0_hat"), np.asarray(raw, dtype=np.float64), as_values(gt, "z_gt"))
        for z0, raw, gt in corpus
    ]
    if not entries:
        raise DataError("empty calibration corpus")

    def objective(log_c: float) -> float:
        c = math.exp(log_c)
        total = 0.0
        for z0, raw, gt in entries:
            sigma = np.maximum(c * raw, SIGMA_FLOOR)
            total += nll_loss(z0, sigma, gt)
        return total / len(entries)

    best = _golden_section_min(objective, math.log(_SCALE_LO), math.log(_SCALE_HI))
    return math.exp(best)
