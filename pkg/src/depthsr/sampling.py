"""Noise injection at the selected timestep and one-step oracle denoisers.

The intermediate noisy latent is ẑ_t + σ̂_t·ε̂ with mean scale
ẑ_t = √ᾱ·ẑ₀ and per-pixel noise scale σ̂_t = √(ᾱ·σ̂₀² + 1 − ᾱ). The
noise proposal blends a seeded Gaussian draw with a guide-aligned
high-frequency residual; at zero coupling it degenerates to the plain
draw. Denoisers are pluggable; the closed-form posterior-mean oracles
below stand in for a pre-trained model and assume the standard forward
process z_t = √ᾱ·z + √(1−ᾱ)·ε.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import ConfigError, DataError
from .rng import stream
from .validation import as_values, check_same_shape


@dataclass(frozen=True)
class NoisyLatent:
    values: np.ndarray
    timestep: int
    alpha_bar: float
    mean_scale: np.ndarray
    noise_scale: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        if not (0 < self.alpha_bar <= 1):
            raise ConfigError(f"alpha_bar must lie in (0, 1], got {self.alpha_bar!r}")


def mean_and_noise_scales(
    z0_hat, sigma0_map: np.ndarray, alpha_bar: float
) -> tuple[np.ndarray, np.ndarray]:
    """(√ᾱ·ẑ₀, √(ᾱ·σ̂₀² + 1 − ᾱ)) with the noise scale per pixel."""
    z0 = as_values(z0_hat, "z0_hat")
    sigma0 = np.asarray(sigma0_map, dtype=np.float64)
    check_same_shape(z0, sigma0, "estimate/sigma")
    if not (np.isfinite(alpha_bar) and 0 < alpha_bar <= 1):
        raise ConfigError(f"alpha_bar must lie in (0, 1], got {alpha_bar!r}")
    mean_scale = math.sqrt(alpha_bar) * z0
    noise_scale = np.sqrt(alpha_bar * sigma0 * sigma0 + 1.0 - alpha_bar)
    return mean_scale, noise_scale


def inject_noise(
    mean_scale: np.ndarray,
    noise_scale: np.ndarray,
    epsilon: np.ndarray,
    *,
    timestep: int,
    alpha_bar: float,
    seed: int | None = None,
) -> NoisyLatent:
    """Element-wise affine combination mean + scale ⊙ epsilon."""
    mean_scale = np.asarray(mean_scale, dtype=np.float64)
    noise_scale = np.asarray(noise_scale, dtype=np.float64)
    epsilon = np.asarray(epsilon, dtype=np.float64)
    check_same_shape(mean_scale, noise_scale, "mean/noise scales")
    check_same_shape(mean_scale, epsilon, "scales/epsilon")
    if not np.all(np.isfinite(epsilon)):
        raise DataError("epsilon must be finite")
    values = mean_scale + noise_scale * epsilon
    return NoisyLatent(
        values=values,
        timestep=int(timestep),
        alpha_bar=float(alpha_bar),
        mean_scale=mean_scale,
        noise_scale=noise_scale,
        seed=seed,
    )


def noise_proposal(
    guide,
    mean_scale: np.ndarray,
    noise_scale: np.ndarray,
    seed: int,
    *,
    kappa: float = 0.25,
    scene_id: str = "",
) -> np.ndarray:
    """Guide-conditioned noise field with unit-Gaussian moments.

    epsilon = (g + κ·highpass(guide)) / √(1 + κ²) where g is a seeded
    unit-Gaussian draw and the highpass residual is standardized. With
    κ = 0 (or a constant guide) the plain draw g is returned unchanged.
    """
    guide_values = as_values(guide, "guide")
    mean_scale = np.asarray(mean_scale, dtype=np.float64)
    check_same_shape(guide_values, mean_scale, "guide/mean scale")
    check_same_shape(guide_values, np.asarray(noise_scale), "guide/noise scale")
    g = stream(seed, "proposal", scene_id).standard_normal(guide_values.shape)
    if kappa == 0:
        return g
    hp = guide_values - _box_mean(guide_values, _HIGHPASS_WINDOW)
    spread = float(hp.std())
    if spread <= 1e-12 * max(1.0, float(np.abs(guide_values).max())):
        return g
    hp = (hp - hp.mean()) / spread
    return (g + kappa * hp) / math.sqrt(1.0 + kappa * kappa)


# Window of the highpass used by the proposal: wide enough that the
# residual covers the whole uncertainty band around upsampled edges.
_HIGHPASS_WINDOW = 33


def _box_mean(values: np.ndarray, size: int) -> np.ndarray:
    """size x size box mean with edge clamp (size odd)."""
    half = size // 2
    padded = np.pad(values, half, mode="edge")
    acc = np.zeros_like(values)
    for d in range(size):
        acc += padded[d : d + values.shape[0], half : half + values.shape[1]]
    rows = acc / size
    padded = np.pad(rows, ((0, 0), (half, half)), mode="edge")
    acc = np.zeros_like(values)
    for d in range(size):
        acc += padded[:, d : d + values.shape[1]]
    return acc / size


@dataclass(frozen=True)
class GaussianPrior:
    """Isotropic Gaussian prior N(mu, sigma²); mu broadcasts per pixel."""

    mu: np.ndarray | float
    sigma: float

    def __post_init__(self):
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise ConfigError(f"prior sigma must be >= 0, got {self.sigma!r}")


@dataclass(frozen=True)
class MixturePrior:
    """Weighted Gaussian mixture; weights must be positive and normalized."""

    components: tuple[tuple[float, float, float], ...]  # (weight, mu, sigma)

    def __post_init__(self):
        comps = tuple((float(w), float(m), float(s)) for w, m, s in self.components)
        if not comps:
            raise ConfigError("mixture prior needs at least one component")
        weights = np.array([c[0] for c in comps])
        if np.any(weights <= 0):
            raise ConfigError("mixture weights must be positive")
        if abs(weights.sum() - 1.0) > 1e-12:
            raise ConfigError(f"mixture weights must sum to 1, got {weights.sum()!r}")
        if any(c[2] < 0 for c in comps):
            raise ConfigError("mixture component sigmas must be >= 0")
        object.__setattr__(self, "components", comps)


def _gaussian_posterior_mean(mu, sigma: float, noisy: NoisyLatent) -> np.ndarray:
    """E[z | z_t] under prior N(mu, sigma²) with z_t = √ᾱ·z + √(1−ᾱ)·ε."""
    a = noisy.alpha_bar
    values = noisy.values
    if a == 1.0 and sigma > 0:
        return np.array(values, dtype=np.float64, copy=True)
    var = a * sigma * sigma + 1.0 - a
    if var == 0.0:
        gain = 0.0
    else:
        gain = math.sqrt(a) * sigma * sigma / var
    return mu + gain * (values - math.sqrt(a) * np.asarray(mu, dtype=np.float64))


def denoise_gaussian_posterior(prior: GaussianPrior, noisy: NoisyLatent) -> np.ndarray:
    """Exact posterior mean under a single Gaussian prior."""
    return _gaussian_posterior_mean(prior.mu, prior.sigma, noisy)


def denoise_mixture_posterior(prior: MixturePrior, noisy: NoisyLatent) -> np.ndarray:
    """Responsibility-weighted combination of per-component posterior means.

    Responsibilities are computed in log space to survive likelihood
    underflow far from all modes.
    """
    a = noisy.alpha_bar
    values = noisy.values
    n = len(prior.components)
    log_resp = np.empty((n,) + values.shape)
    post = np.empty((n,) + values.shape)
    for i, (w, mu, sig) in enumerate(prior.components):
        var = a * sig * sig + 1.0 - a
        if var == 0.0:
            # Degenerate: alpha_bar == 1 and sigma == 0; the component is a
            # point mass and its likelihood collapses to a delta at mu.
            diff = values - mu
            log_resp[i] = np.where(diff == 0.0, 0.0, -np.inf) + math.log(w)
            post[i] = mu
            continue
        diff = values - math.sqrt(a) * mu
        log_resp[i] = math.log(w) - 0.5 * (diff * diff / var + math.log(var))
        post[i] = _gaussian_posterior_mean(mu, sig, noisy)
    peak = log_resp.max(axis=0)
    resp = np.exp(log_resp - peak)
    resp /= resp.sum(axis=0)
    return (resp * post).sum(axis=0)


class Denoiser(Protocol):
    """One-step denoiser contract: (guide, noisy latent) → clean estimate."""

    def denoise(self, guide, noisy: NoisyLatent) -> np.ndarray: ...


@dataclass(frozen=True)
class GaussianDenoiser:
    prior: GaussianPrior

    def denoise(self, guide, noisy: NoisyLatent) -> np.ndarray:
        return denoise_gaussian_posterior(self.prior, noisy)


@dataclass(frozen=True)
class MixtureDenoiser:
    prior: MixturePrior

    def denoise(self, guide, noisy: NoisyLatent) -> np.ndarray:
        return denoise_mixture_posterior(self.prior, noisy)


class IdentityCodec:
    """Latent space equals pixel space; encode/decode are named pass-throughs."""

    def encode(self, depth: np.ndarray) -> np.ndarray:
        return depth

    def decode(self, latent: np.ndarray) -> np.ndarray:
        return latent
