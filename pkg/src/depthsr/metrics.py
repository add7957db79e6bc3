"""Depth evaluation metrics and sampling-stage losses.

All metrics are computed on the ground-truth validity mask intersected
with finite predictions. δ₁.₀₅ is the fraction of valid pixels whose
prediction/truth ratio (in either direction) stays below 1.05.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .fields import DepthField
from .validation import as_values, check_same_shape

DELTA_THRESHOLD = 1.05


@dataclass(frozen=True)
class MetricReport:
    scene_id: str
    rmse: float
    mae: float
    delta_105: float
    valid_count: int
    nonfinite_pred: int = 0
    config_hash: str = ""

    def __post_init__(self):
        if self.valid_count <= 0:
            raise DataError("metric report needs at least one valid pixel")
        if not (np.isfinite(self.rmse) and np.isfinite(self.mae)):
            raise DataError("metrics must be finite")
        # Power-mean inequality; allow only rounding slack.
        if self.rmse < self.mae - 1e-12:
            raise DataError(f"rmse {self.rmse} < mae {self.mae}")
        if not 0.0 <= self.delta_105 <= 1.0:
            raise DataError(f"delta_105 outside [0, 1]: {self.delta_105}")


def compute_metrics(
    pred: DepthField, gt: DepthField, *, scene_id: str = "", config_hash: str = ""
) -> MetricReport:
    """RMSE, MAE, and δ₁.₀₅ over valid ground-truth pixels."""
    check_same_shape(pred.values, gt.values, "prediction/truth")
    finite_pred = np.isfinite(pred.values)
    mask = gt.valid & finite_pred
    nonfinite = int((gt.valid & ~finite_pred).sum())
    if not mask.any():
        raise DataError("no valid pixels shared by prediction and ground truth")
    p = pred.values[mask]
    g = gt.values[mask]
    if np.any(g <= 0):
        raise DataError("ground truth must be positive on valid pixels")
    diff = p - g
    rmse = math.sqrt(float(np.mean(diff * diff)))
    mae = float(np.mean(np.abs(diff)))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.maximum(p / g, g / p)
    delta = float(np.mean((p > 0) & (ratio < DELTA_THRESHOLD)))
    return MetricReport(
        scene_id=scene_id,
        rmse=rmse,
        mae=mae,
        delta_105=delta,
        valid_count=int(mask.sum()),
        nonfinite_pred=nonfinite,
        config_hash=config_hash,
    )


def rec_loss(z_hat, z_gt, d_hat, d_gt, mask: np.ndarray) -> float:
    """Mean squared latent error plus mean absolute depth error over mask."""
    zh = as_values(z_hat, "z_hat")
    zg = as_values(z_gt, "z_gt")
    dh = as_values(d_hat, "d_hat")
    dg = as_values(d_gt, "d_gt")
    check_same_shape(zh, zg, "latents")
    check_same_shape(dh, dg, "depths")
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise DataError("mask selects no pixels")
    latent_term = float(np.mean((zh[mask] - zg[mask]) ** 2))
    depth_term = float(np.mean(np.abs(dh[mask] - dg[mask])))
    return latent_term + depth_term


def grad_loss(d_hat, d_gt, valid: np.ndarray) -> float:
    """L1 difference of forward spatial gradients, per direction.

    A difference contributes only when both stencil pixels are valid; each
    direction is averaged over its own contributing count.
    """
    dh = as_values(d_hat, "d_hat")
    dg = as_values(d_gt, "d_gt")
    check_same_shape(dh, dg, "depths")
    valid = np.asarray(valid, dtype=bool)
    total = 0.0
    for axis in (0, 1):
        sl_a = [slice(None)] * 2
        sl_b = [slice(None)] * 2
        sl_a[axis] = slice(1, None)
        sl_b[axis] = slice(None, -1)
        pair_valid = valid[tuple(sl_a)] & valid[tuple(sl_b)]
        if not pair_valid.any():
            continue
        gh = dh[tuple(sl_a)] - dh[tuple(sl_b)]
        gg = dg[tuple(sl_a)] - dg[tuple(sl_b)]
        total += float(np.mean(np.abs(gh[pair_valid] - gg[pair_valid])))
    return total


def aggregate(reports) -> dict:
    """Corpus means weighted by valid pixel count."""
    reports = list(reports)
    if not reports:
        raise DataError("no reports to aggregate")
    weights = np.array([r.valid_count for r in reports], dtype=np.float64)
    total = weights.sum()
    return {
        "scenes": len(reports),
        "rmse": float(np.dot(weights, [r.rmse for r in reports]) / total),
        "mae": float(np.dot(weights, [r.mae for r in reports]) / total),
        "delta_105": float(np.dot(weights, [r.delta_105 for r in reports]) / total),
        "valid_count": int(total),
    }
