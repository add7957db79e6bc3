"""Discrete diffusion noise schedule and timestep lookup.

A schedule holds betas ``β_1..β_T`` and the cumulative products
``ᾱ_t = Π_{s=1..t} (1 − β_s)``. Timestep indices are 1-based throughout
to match the product notation; ``alpha_bars`` is strictly decreasing, so
continuous ᾱ targets map to discrete steps by binary search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray
    alpha_bars: np.ndarray

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        alpha_bars = np.asarray(self.alpha_bars, dtype=np.float64)
        if betas.ndim != 1 or betas.size == 0 or betas.shape != alpha_bars.shape:
            raise ConfigError("schedule arrays must be 1-D, non-empty, and equal length")
        if not np.all(np.isfinite(betas)) or np.any(betas <= 0) or np.any(betas >= 1):
            raise ConfigError("betas must lie strictly inside (0, 1)")
        if np.any(np.diff(betas) < 0):
            raise ConfigError("betas must be non-decreasing")
        if np.any(np.diff(alpha_bars) >= 0):
            raise ConfigError("alpha_bars must be strictly decreasing")
        if alpha_bars[0] >= 1 or alpha_bars[-1] <= 0:
            raise ConfigError("alpha_bars must lie inside (0, 1)")
        betas.setflags(write=False)
        alpha_bars.setflags(write=False)
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bars", alpha_bars)

    @property
    def timesteps(self) -> int:
        return int(self.betas.size)

    def alpha_bar(self, t: int) -> float:
        """ᾱ_t for a 1-based timestep index."""
        if not 1 <= t <= self.timesteps:
            raise ConfigError(f"timestep {t} outside [1, {self.timesteps}]")
        return float(self.alpha_bars[t - 1])


def build_linear_schedule(timesteps: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """Linearly interpolated betas from beta_start to beta_end inclusive."""
    if not isinstance(timesteps, (int, np.integer)) or timesteps < 1:
        raise ConfigError(f"timesteps must be a positive integer, got {timesteps!r}")
    if not (np.isfinite(beta_start) and np.isfinite(beta_end)):
        raise ConfigError("beta bounds must be finite")
    if not 0 < beta_start <= beta_end < 1:
        raise ConfigError(f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
    betas = np.linspace(beta_start, beta_end, timesteps, dtype=np.float64)
    alpha_bars = np.cumprod(1.0 - betas)
    return NoiseSchedule(betas, alpha_bars)


def alpha_to_timestep(schedule: NoiseSchedule, target_alpha: float) -> int:
    """1-based t minimizing |ᾱ_t − target|; exact ties go to the larger t.

    Binary search over the strictly decreasing alpha_bars sequence.
    """
    if not (np.isfinite(target_alpha) and 0 < target_alpha <= 1):
        raise ConfigError(f"target alpha must lie in (0, 1], got {target_alpha!r}")
    ab = schedule.alpha_bars
    # First index with ab[i] <= target (ab is descending).
    lo, hi = 0, ab.size
    while lo < hi:
        mid = (lo + hi) // 2
        if ab[mid] > target_alpha:
            lo = mid + 1
        else:
            hi = mid
    if lo == 0:
        return 1
    if lo == ab.size:
        return ab.size
    # Candidates ab[lo-1] > target >= ab[lo]; prefer the noisier step on a tie.
    if abs(ab[lo] - target_alpha) <= abs(ab[lo - 1] - target_alpha):
        return lo + 1
    return lo
