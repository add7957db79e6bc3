"""Adaptive diffusion sampling for guided depth super-resolution."""

from .calibration import CalibrationOutput, calibrate, fit_sigma_scale, l_d_loss, nll_loss
from .config import PipelineConfig, default_config, load_config, save_config
from .degradation import (
    BlurSpec,
    DegradationSpec,
    add_gaussian_noise,
    apply_spec,
    bicubic_resample,
    gaussian_blur,
    quantize,
    sparsify_and_fill,
)
from .errors import ConfigError, DataError, DepthSRError, NumericError
from .estimator import DepthUpsampler
from .fields import DepthField
from .gaussians import (
    IsotropicGaussian,
    TradeoffParams,
    forward_marginal,
    h_maximizer,
    h_objective,
    wasserstein2_exact,
    wasserstein2_surrogate,
)
from .metrics import MetricReport, compute_metrics, grad_loss, rec_loss
from .pfm import read_pfm, write_pfm
from .sampling import (
    GaussianPrior,
    MixturePrior,
    NoisyLatent,
    denoise_gaussian_posterior,
    denoise_mixture_posterior,
    inject_noise,
    mean_and_noise_scales,
    noise_proposal,
)
from .scenes import SceneSpec, generate_scene
from .schedule import NoiseSchedule, alpha_to_timestep, build_linear_schedule
from .selection import SelectionConfig, select_alpha, select_timestep, sigma_bar

__version__ = "0.1.0"

__all__ = [
    "BlurSpec",
    "CalibrationOutput",
    "ConfigError",
    "DataError",
    "DegradationSpec",
    "DepthField",
    "DepthSRError",
    "DepthUpsampler",
    "GaussianPrior",
    "IsotropicGaussian",
    "MetricReport",
    "MixturePrior",
    "NoiseSchedule",
    "NoisyLatent",
    "NumericError",
    "PipelineConfig",
    "SceneSpec",
    "SelectionConfig",
    "TradeoffParams",
    "add_gaussian_noise",
    "alpha_to_timestep",
    "apply_spec",
    "bicubic_resample",
    "build_linear_schedule",
    "calibrate",
    "compute_metrics",
    "default_config",
    "denoise_gaussian_posterior",
    "denoise_mixture_posterior",
    "fit_sigma_scale",
    "forward_marginal",
    "gaussian_blur",
    "generate_scene",
    "grad_loss",
    "h_maximizer",
    "h_objective",
    "inject_noise",
    "l_d_loss",
    "load_config",
    "mean_and_noise_scales",
    "nll_loss",
    "noise_proposal",
    "quantize",
    "read_pfm",
    "rec_loss",
    "save_config",
    "select_alpha",
    "select_timestep",
    "sigma_bar",
    "sparsify_and_fill",
    "wasserstein2_exact",
    "wasserstein2_surrogate",
    "write_pfm",
]
