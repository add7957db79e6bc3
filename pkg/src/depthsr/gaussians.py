"""Gaussian algebra for forward marginals and the timestep trade-off objective.

The forward marginal of a signal z0 with estimation uncertainty sigma0 at
noise level ᾱ is N(√ᾱ·z0, (ᾱ·σ0² + 1 − ᾱ)·I); with σ0 = 0 this is the
standard variance-preserving forward process. Two 2-Wasserstein distances
are provided: the closed form for isotropic Gaussians (with the dimension
factor on the variance term) and the surrogate √ᾱ·ω that drives timestep
selection. The trade-off objective H(ᾱ) = √ᾱ·exp(−λω√ᾱ) has analytic
maximizer min(1, 1/(λω)²).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError

# Beyond this exponent the direct product underflows; evaluate in log space.
_LOG_SPACE_THRESHOLD = 30.0


@dataclass(frozen=True)
class IsotropicGaussian:
    """Mean vector plus a shared scalar standard deviation."""

    mean: np.ndarray
    sigma: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64).reshape(-1)
        if mean.size == 0 or not np.all(np.isfinite(mean)):
            raise DataError("mean must be a non-empty finite vector")
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise DataError(f"sigma must be finite and >= 0, got {self.sigma!r}")
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def dim(self) -> int:
        return int(self.mean.size)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """n independent draws, one per row."""
        return self.mean[None, :] + self.sigma * rng.standard_normal((n, self.dim))


@dataclass(frozen=True)
class TradeoffParams:
    """Weight lam on the distance term and distance scale omega."""

    lam: float
    omega: float

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ConfigError(f"lam must be positive, got {self.lam!r}")
        if not (np.isfinite(self.omega) and self.omega > 0):
            raise ConfigError(f"omega must be positive, got {self.omega!r}")


def _check_alpha_bar(alpha_bar: float) -> float:
    if not (np.isfinite(alpha_bar) and 0 < alpha_bar <= 1):
        raise ConfigError(f"alpha_bar must lie in (0, 1], got {alpha_bar!r}")
    return float(alpha_bar)


def forward_marginal(z0: np.ndarray, sigma0: float, alpha_bar: float) -> IsotropicGaussian:
    """N(√ᾱ·z0, ᾱ·σ0² + 1 − ᾱ); exact forward marginal when sigma0 == 0."""
    alpha_bar = _check_alpha_bar(alpha_bar)
    z0 = np.asarray(z0, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(z0)):
        raise DataError("z0 must be finite")
    if not (np.isfinite(sigma0) and sigma0 >= 0):
        raise DataError(f"sigma0 must be finite and >= 0, got {sigma0!r}")
    mean = math.sqrt(alpha_bar) * z0
    sigma = math.sqrt(alpha_bar * sigma0 * sigma0 + 1.0 - alpha_bar)
    return IsotropicGaussian(mean, sigma)


def wasserstein2_exact(p: IsotropicGaussian, q: IsotropicGaussian) -> float:
    """√(‖μ_p − μ_q‖² + dim·(σ_p − σ_q)²), the isotropic closed form."""
    if p.dim != q.dim:
        raise DataError(f"dimension mismatch: {p.dim} vs {q.dim}")
    mean_sq = float(np.sum((p.mean - q.mean) ** 2))
    var_sq = p.dim * (p.sigma - q.sigma) ** 2
    return math.sqrt(mean_sq + var_sq)


def wasserstein2_surrogate(alpha_bar: float, omega: float) -> float:
    """√ᾱ·ω, the simplified distance the selection rule is derived from."""
    alpha_bar = _check_alpha_bar(alpha_bar)
    if not (np.isfinite(omega) and omega >= 0):
        raise ConfigError(f"omega must be finite and >= 0, got {omega!r}")
    return math.sqrt(alpha_bar) * omega


def log_h_objective(alpha_bar: float, params: TradeoffParams) -> float:
    """log H(ᾱ) = ½·log ᾱ − λω√ᾱ; exact for argmax comparisons."""
    alpha_bar = _check_alpha_bar(alpha_bar)
    root = math.sqrt(alpha_bar)
    return 0.5 * math.log(alpha_bar) - params.lam * params.omega * root


def h_objective(alpha_bar: float, params: TradeoffParams) -> float:
    """H(ᾱ) = √ᾱ·exp(−λω√ᾱ)."""
    alpha_bar = _check_alpha_bar(alpha_bar)
    root = math.sqrt(alpha_bar)
    exponent = params.lam * params.omega * root
    if exponent > _LOG_SPACE_THRESHOLD:
        return math.exp(0.5 * math.log(alpha_bar) - exponent)
    return root * math.exp(-exponent)


def h_maximizer(params: TradeoffParams) -> float:
    """Analytic maximizer min(1, 1/(λω)²) of H over (0, 1].

    For λω <= 1 the interior critical point sits at or beyond 1 and H is
    increasing throughout (0, 1], so the boundary value 1 is returned.
    """
    critical = 1.0 / (params.lam * params.omega) ** 2
    return min(1.0, critical)
