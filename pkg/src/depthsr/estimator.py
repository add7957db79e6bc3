"""Scikit-learn style estimator wrapping the full sampling pipeline.

``fit`` learns the scalar uncertainty calibration factor from a corpus of
(guide, degraded input) pairs with ground truth; ``predict`` maps pairs to
high-resolution depth fields. Parameters follow sklearn conventions
(stored verbatim, fitted state suffixed with an underscore), so the
estimator composes with ``get_params``/``set_params`` and ``clone``.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .calibration import calibrate, fit_sigma_scale
from .config import DenoiserConfig, PipelineConfig, ScheduleConfig
from .errors import DataError
from .fields import DepthField
from .pipeline import ABLATIONS, build_context, run_scene
from .selection import SelectionConfig
from .validation import check_fields, check_scene_pairs


class DepthUpsampler(BaseEstimator):
    """Adaptive diffusion-sampling depth upsampler.

    Parameters mirror the pipeline configuration: the noise schedule, the
    timestep selection rule (threshold tau, clamp floor, rule variant),
    the guide coupling weight kappa of the noise proposal, and the oracle
    denoiser prior. ``prior`` is ``(mu, sigma)`` for the Gaussian denoiser
    or a sequence of ``(weight, mu, sigma)`` rows for the mixture.
    """

    def __init__(
        self,
        timesteps: int = 1000,
        beta_start: float = 1e-4,
        beta_end: float = 0.02,
        tau: float = 0.14,
        alpha_min: float | None = None,
        rule: str = "simplified",
        kappa: float = 0.25,
        denoiser: str = "mixture",
        prior: tuple = ((0.5, 3.0, 0.02), (0.5, 11.0, 0.02)),
        sigma_scale: float = 1.0,
        seed: int = 0,
    ):
        self.timesteps = timesteps
        self.beta_start = beta_start
        self.beta_end = beta_end
        self.tau = tau
        self.alpha_min = alpha_min
        self.rule = rule
        self.kappa = kappa
        self.denoiser = denoiser
        self.prior = prior
        self.sigma_scale = sigma_scale
        self.seed = seed

    def _config(self) -> PipelineConfig:
        if self.denoiser == "gaussian":
            mu, sigma = self.prior
            denoiser = DenoiserConfig(kind="gaussian", mu=float(mu), sigma=float(sigma))
        else:
            denoiser = DenoiserConfig(
                kind="mixture", components=tuple(tuple(c) for c in self.prior)
            )
        return PipelineConfig(
            seed=self.seed,
            schedule=ScheduleConfig(
                timesteps=self.timesteps, beta_start=self.beta_start, beta_end=self.beta_end
            ),
            selection=SelectionConfig(tau=self.tau, alpha_min=self.alpha_min, rule=self.rule),
            denoiser=denoiser,
            kappa=self.kappa,
            sigma_scale=getattr(self, "sigma_scale_", self.sigma_scale),
        )

    def fit(self, X, y):
        """Fit the uncertainty calibration scalar on (guide, input) pairs vs truth."""
        pairs = check_scene_pairs(X)
        truths = check_fields(y)
        if len(pairs) != len(truths):
            raise DataError(f"X has {len(pairs)} pairs but y has {len(truths)} fields")
        corpus = []
        for (guide, d_in), gt in zip(pairs, truths):
            cal = calibrate(guide, d_in, sigma_scale=1.0, out_shape=guide.shape)
            corpus.append((cal.z0_hat.values, cal.raw_stat, gt.values))
        self.sigma_scale_ = fit_sigma_scale(corpus)
        self.n_scenes_ = len(corpus)
        return self

    def predict(self, X, ablation: str = "none", scene_ids=None) -> list[DepthField]:
        """High-resolution depth field for each (guide, input) pair."""
        if ablation not in ABLATIONS:
            raise DataError(f"ablation must be one of {ABLATIONS}, got {ablation!r}")
        pairs = check_scene_pairs(X)
        if scene_ids is None:
            scene_ids = [f"scene_{i:04d}" for i in range(len(pairs))]
        ctx = build_context(self._config())
        return [
            run_scene(ctx, sid, guide, d_in, ablation=ablation).prediction
            for sid, (guide, d_in) in zip(scene_ids, pairs)
        ]

    def fit_predict(self, X, y) -> list[DepthField]:
        return self.fit(X, y).predict(X)

    def score(self, X, y) -> float:
        """Negative corpus RMSE (higher is better, sklearn convention)."""
        from .metrics import aggregate, compute_metrics

        preds = self.predict(X)
        truths = check_fields(y)
        reports = [
            compute_metrics(p, t, scene_id=str(i)) for i, (p, t) in enumerate(zip(preds, truths))
        ]
        return -float(aggregate(reports)["rmse"])
