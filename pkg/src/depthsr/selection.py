"""Adaptive timestep selection from calibrated uncertainty.

The simplified rule targets ᾱ = τ/σ̄₀; the threshold rule targets
ᾱ = (τ/σ̄₀)² (the smallest t with √ᾱ_t·σ̄₀ ≤ τ). Both clamp to
[alpha_min, 1] and snap to the nearest discrete schedule step. The two
rules differ by a square and are deliberately kept separate.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DataError
from .schedule import NoiseSchedule, alpha_to_timestep

RULES = ("simplified", "threshold")

SIGMA_BAR_FLOOR = 1e-6


@dataclass(frozen=True)
class SelectionConfig:
    tau: float = 0.14
    alpha_min: float | None = None  # None: use the schedule's ᾱ_T
    rule: str = "simplified"

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ConfigError(f"tau must be positive, got {self.tau!r}")
        if self.alpha_min is not None and not (
            np.isfinite(self.alpha_min) and 0 < self.alpha_min < 1
        ):
            raise ConfigError(f"alpha_min must lie in (0, 1), got {self.alpha_min!r}")
        if self.rule not in RULES:
            raise ConfigError(f"rule must be one of {RULES}, got {self.rule!r}")

    def with_default_alpha_min(self, schedule: NoiseSchedule) -> "SelectionConfig":
        if self.alpha_min is not None:
            return self
        return replace(self, alpha_min=float(schedule.alpha_bars[-1]))


def sigma_bar(sigma_map: np.ndarray) -> float:
    """Spatial mean of the per-pixel standard deviations, floored at 1e-6."""
    arr = np.asarray(sigma_map, dtype=np.float64)
    if arr.size == 0:
        raise DataError("sigma map is empty")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DataError("sigma map entries must be finite and >= 0")
    return max(float(arr.mean()), SIGMA_BAR_FLOOR)


def select_alpha(sigma_bar_value: float, config: SelectionConfig) -> float:
    """Continuous ᾱ target, clamped to [alpha_min, 1]."""
    if not (np.isfinite(sigma_bar_value) and sigma_bar_value > 0):
        raise DataError(f"sigma_bar must be positive, got {sigma_bar_value!r}")
    if config.alpha_min is None:
        raise ConfigError("alpha_min unresolved; call with_default_alpha_min first")
    ratio = config.tau / sigma_bar_value
    if config.rule == "threshold":
        ratio = ratio * ratio
    return min(1.0, max(config.alpha_min, ratio))


def select_timestep(
    sigma_bar_value: float, config: SelectionConfig, schedule: NoiseSchedule
) -> tuple[int, float]:
    """Snap the continuous target to the schedule; returns (t̂, ᾱ_t̂)."""
    config = config.with_default_alpha_min(schedule)
    target = select_alpha(sigma_bar_value, config)
    t_hat = alpha_to_timestep(schedule, target)
    return t_hat, schedule.alpha_bar(t_hat)
