import math

import numpy as np
import pytest

from depthsr.errors import DataError
from depthsr.gaussians import forward_marginal
from depthsr.rng import stream
from depthsr.sampling import (
    GaussianPrior,
    MixtureDenoiser,
    MixturePrior,
    NoisyLatent,
    denoise_gaussian_posterior,
    denoise_mixture_posterior,
    inject_noise,
    mean_and_noise_scales,
    noise_proposal,
)
from depthsr.schedule import build_linear_schedule
from depthsr.selection import SelectionConfig, select_timestep


def _latent(values, alpha_bar, timestep=1):
    values = np.asarray(values, dtype=np.float64)
    return NoisyLatent(
        values=values,
        timestep=timestep,
        alpha_bar=alpha_bar,
        mean_scale=np.zeros_like(values),
        noise_scale=np.ones_like(values),
    )


class TestScales:
    def test_noiseless_endpoint(self):
        z0 = np.full((4, 4), 2.0)
        mean, noise = mean_and_noise_scales(z0, np.zeros((4, 4)), 1.0)
        assert np.array_equal(mean, z0)
        assert np.allclose(noise, 0.0, atol=1e-8)

    def test_prior_limit(self):
        z0 = np.full((4, 4), 2.0)
        mean, noise = mean_and_noise_scales(z0, np.zeros((4, 4)), 1e-12)
        assert np.all(np.abs(mean) < 1e-5)
        assert np.allclose(noise, 1.0, atol=1e-9)

    def test_closed_form_value(self):
        # sqrt(0.5*0.04 + 0.5), evaluated independently.
        mean, noise = mean_and_noise_scales(
            np.full((2, 2), 1.0), np.full((2, 2), 0.2), 0.5
        )
        assert np.allclose(noise, 0.7211102550927978, atol=1e-15)
        assert np.allclose(mean, math.sqrt(0.5), atol=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(DataError):
            mean_and_noise_scales(np.zeros((2, 2)), np.zeros((3, 3)), 0.5)


class TestInjectNoise:
    def test_zero_epsilon(self):
        mean = np.full((3, 3), 1.5)
        noise = np.full((3, 3), 0.7)
        out = inject_noise(mean, noise, np.zeros((3, 3)), timestep=5, alpha_bar=0.9)
        assert np.array_equal(out.values, mean)

    def test_pure_noise(self):
        eps = np.random.default_rng(0).standard_normal((3, 3))
        out = inject_noise(np.zeros((3, 3)), np.ones((3, 3)), eps, timestep=5, alpha_bar=0.9)
        assert np.array_equal(out.values, eps)

    def test_monte_carlo_moments(self):
        rng = np.random.default_rng(1)
        z0 = np.array([[1.0, -2.0], [3.0, 0.5]])
        sigma0 = np.array([[0.1, 0.3], [0.0, 0.2]])
        mean, noise = mean_and_noise_scales(z0, sigma0, 0.6)
        draws = np.stack(
            [
                inject_noise(
                    mean, noise, rng.standard_normal((2, 2)), timestep=3, alpha_bar=0.6
                ).values
                for _ in range(100_000)
            ]
        )
        assert np.allclose(draws.mean(axis=0), mean, atol=3 * 1.2 / math.sqrt(100_000))
        assert np.allclose(draws.std(axis=0), noise, rtol=0.01)

    def test_records_metadata(self):
        out = inject_noise(
            np.zeros((2, 2)), np.ones((2, 2)), np.zeros((2, 2)),
            timestep=17, alpha_bar=0.42, seed=99,
        )
        assert out.timestep == 17 and out.alpha_bar == 0.42 and out.seed == 99

    def test_noise_scale_bounds(self):
        sigma0 = np.random.default_rng(5).uniform(0, 0.5, size=(8, 8))
        a = 0.7
        _, noise = mean_and_noise_scales(np.ones((8, 8)), sigma0, a)
        lo = math.sqrt(1 - a)
        hi = math.sqrt(a * sigma0.max() ** 2 + 1 - a)
        assert np.all(noise >= lo - 1e-12) and np.all(noise <= hi + 1e-12)


class TestNoiseProposal:
    def test_kappa_zero_equals_plain_seeded_draw(self):
        guide = np.random.default_rng(2).uniform(0, 1, size=(16, 16))
        shape = (16, 16)
        out = noise_proposal(guide, np.zeros(shape), np.ones(shape), 7, kappa=0.0)
        plain = stream(7, "proposal", "").standard_normal(shape)
        assert out.tobytes() == plain.tobytes()

    def test_constant_guide_equals_kappa_zero(self):
        shape = (16, 16)
        guide = np.full(shape, 0.37)
        out = noise_proposal(guide, np.zeros(shape), np.ones(shape), 7, kappa=0.25)
        base = noise_proposal(guide, np.zeros(shape), np.ones(shape), 7, kappa=0.0)
        assert out.tobytes() == base.tobytes()

    def test_unit_moments(self):
        rng = np.random.default_rng(3)
        guide = rng.uniform(0, 1, size=(128, 128))
        out = noise_proposal(guide, np.zeros((128, 128)), np.ones((128, 128)), 11, kappa=0.25)
        n = out.size
        assert abs(out.mean()) < 3 / math.sqrt(n)
        assert out.std() == pytest.approx(1.0, rel=0.01)

    def test_determinism_across_calls(self):
        guide = np.random.default_rng(4).uniform(0, 1, size=(32, 32))
        a = noise_proposal(guide, np.zeros((32, 32)), np.ones((32, 32)), 5, kappa=0.25)
        b = noise_proposal(guide, np.zeros((32, 32)), np.ones((32, 32)), 5, kappa=0.25)
        assert a.tobytes() == b.tobytes()


class TestGaussianDenoiser:
    def test_alpha_one_returns_values_exactly(self):
        values = np.random.default_rng(6).normal(size=(4, 4))
        prior = GaussianPrior(mu=0.3, sigma=1.2)
        out = denoise_gaussian_posterior(prior, _latent(values, 1.0))
        assert np.array_equal(out, values)

    def test_degenerate_prior_returns_mu(self):
        values = np.random.default_rng(7).normal(size=(4, 4))
        prior = GaussianPrior(mu=2.5, sigma=0.0)
        out = denoise_gaussian_posterior(prior, _latent(values, 0.5))
        assert np.allclose(out, 2.5, atol=1e-15)

    def test_matches_importance_weighted_monte_carlo(self):
        # E[z | z_t] with z ~ N(mu, sigma^2), z_t = sqrt(a) z + sqrt(1-a) e.
        rng = np.random.default_rng(8)
        mu, sigma, a, z_t = 1.3, 0.8, 0.55, 0.4
        prior = GaussianPrior(mu=mu, sigma=sigma)
        analytic = denoise_gaussian_posterior(prior, _latent([[z_t]], a))[0, 0]
        z = mu + sigma * rng.standard_normal(1_000_000)
        log_w = -0.5 * (z_t - math.sqrt(a) * z) ** 2 / (1 - a)
        w = np.exp(log_w - log_w.max())
        est = float(np.sum(w * z) / np.sum(w))
        se = math.sqrt(float(np.sum(w**2 * (z - est) ** 2)) / float(np.sum(w)) ** 2)
        assert abs(analytic - est) < 3 * se


class TestMixtureDenoiser:
    def test_symmetric_two_mode_returns_zero(self):
        prior = MixturePrior(((0.5, -1.0, 0.4), (0.5, 1.0, 0.4)))
        out = denoise_mixture_posterior(prior, _latent([[0.0]], 0.6))
        assert out[0, 0] == pytest.approx(0.0, abs=1e-15)

    def test_single_component_reduces_to_gaussian(self):
        values = np.random.default_rng(9).normal(size=(5, 5))
        mix = MixturePrior(((1.0, 0.7, 0.9),))
        single = GaussianPrior(mu=0.7, sigma=0.9)
        for a in (0.3, 0.8, 1.0):
            out_mix = denoise_mixture_posterior(mix, _latent(values, a))
            out_g = denoise_gaussian_posterior(single, _latent(values, a))
            assert np.array_equal(out_mix, out_g)

    def test_matches_1d_quadrature_oracle(self):
        from scipy.integrate import simpson

        prior = MixturePrior(((0.3, -2.0, 0.5), (0.7, 1.5, 0.8)))
        a = 0.45
        for z_t in (-1.0, 0.2, 2.5):
            analytic = denoise_mixture_posterior(prior, _latent([[z_t]], a))[0, 0]
            z = np.linspace(-12, 12, 400_001)
            density = sum(
                w / (s * math.sqrt(2 * math.pi)) * np.exp(-0.5 * ((z - m) / s) ** 2)
                for w, m, s in prior.components
            )
            lik = np.exp(-0.5 * (z_t - math.sqrt(a) * z) ** 2 / (1 - a))
            post = density * lik
            oracle = simpson(z * post, x=z) / simpson(post, x=z)
            assert analytic == pytest.approx(oracle, abs=1e-6)

    def test_underflow_far_from_modes(self):
        # Likelihoods underflow to exp(-1e6); responsibilities must still
        # resolve to the nearer mode and reproduce its posterior mean.
        prior = MixturePrior(((0.5, -1.0, 0.01), (0.5, 1.0, 0.01)))
        latent = _latent([[60.0]], 0.999)
        out = denoise_mixture_posterior(prior, latent)
        assert np.isfinite(out).all()
        winner = denoise_gaussian_posterior(GaussianPrior(mu=1.0, sigma=0.01), latent)
        assert out[0, 0] == pytest.approx(winner[0, 0], rel=1e-12)


class TestPipelineInvariants:
    def test_composition_identity(self):
        # sigma0 = 0, alpha_bar = 1, epsilon = 0: sample -> denoise is identity.
        z0 = np.random.default_rng(10).uniform(1, 5, size=(6, 6))
        mean, noise = mean_and_noise_scales(z0, np.zeros((6, 6)), 1.0)
        latent = inject_noise(mean, noise, np.zeros((6, 6)), timestep=1, alpha_bar=1.0)
        out = denoise_gaussian_posterior(GaussianPrior(mu=0.0, sigma=5.0), latent)
        assert np.allclose(out, z0, atol=1e-12)

    def test_marginal_consistency_with_forward_marginal(self):
        z0 = np.array([2.0, -1.0, 0.5, 3.0])
        a = 0.35
        marginal = forward_marginal(z0, 0.0, a)
        mean, noise = mean_and_noise_scales(z0.reshape(1, -1), np.zeros((1, 4)), a)
        rng = np.random.default_rng(11)
        draws = np.stack(
            [
                inject_noise(
                    mean, noise, rng.standard_normal((1, 4)), timestep=2, alpha_bar=a
                ).values[0]
                for _ in range(100_000)
            ]
        )
        assert np.allclose(draws.mean(axis=0), marginal.mean, atol=0.01)
        assert np.allclose(draws.std(axis=0), marginal.sigma, rtol=0.01)

    def test_snap_to_manifold_beats_minimal_noising(self):
        # Corrupted estimate of a two-mode signal: denoising at the
        # adaptively selected timestep must beat denoising at t = 1.
        schedule = build_linear_schedule(1000, 1e-4, 0.02)
        config = SelectionConfig(tau=0.14, alpha_min=1e-4)
        prior = MixturePrior(((0.5, -10.0, 0.05), (0.5, 10.0, 0.05)))
        denoiser = MixtureDenoiser(prior)
        true_mode = -10.0
        sigma_c = 0.5
        err_adaptive, err_minimal = [], []
        for trial in range(500):
            rng = stream(1234, "snap", trial)
            z0_hat = np.full((1, 1), true_mode) + sigma_c * rng.standard_normal((1, 1))
            sigma0 = np.full((1, 1), sigma_c)
            t_hat, a_hat = select_timestep(sigma_c, config, schedule)
            for label, (t, a) in (("adaptive", (t_hat, a_hat)), ("minimal", (1, schedule.alpha_bar(1)))):
                mean, noise = mean_and_noise_scales(z0_hat, sigma0, a)
                eps = rng.standard_normal((1, 1))
                latent = inject_noise(mean, noise, eps, timestep=t, alpha_bar=a)
                out = denoiser.denoise(None, latent)
                err = float((out[0, 0] - true_mode) ** 2)
                (err_adaptive if label == "adaptive" else err_minimal).append(err)
        assert np.mean(err_adaptive) < np.mean(err_minimal)

    def test_bit_identical_latents_for_identical_seeds(self):
        guide = np.random.default_rng(12).uniform(0, 1, size=(24, 24))
        z0 = np.random.default_rng(13).uniform(1, 5, size=(24, 24))
        sigma0 = np.random.default_rng(14).uniform(0, 0.4, size=(24, 24))
        outs = []
        for _ in range(2):
            mean, noise = mean_and_noise_scales(z0, sigma0, 0.6)
            eps = noise_proposal(guide, mean, noise, 31, kappa=0.25, scene_id="s0")
            outs.append(inject_noise(mean, noise, eps, timestep=4, alpha_bar=0.6, seed=31).values)
        assert outs[0].tobytes() == outs[1].tobytes()
