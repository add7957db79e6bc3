"""Shared fixtures and independent oracle helpers."""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import pytest

from depthsr.calibration import calibrate, fit_sigma_scale
from depthsr.config import default_config
from depthsr.degradation import apply_spec
from depthsr.rng import child_seed
from depthsr.scenes import generate_scene
from depthsr.schedule import build_linear_schedule


@pytest.fixture(scope="session")
def default_schedule():
    return build_linear_schedule(1000, 1e-4, 0.02)


def golden_section_max(f, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Independent golden-section maximizer used as a search oracle."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv_phi * (hi - lo)
    x2 = lo + inv_phi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv_phi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv_phi * (hi - lo)
            f2 = f(x2)
    return (lo + hi) / 2.0


def build_scene(seed: int, *, degrade=True, config=None):
    """One (gt, guide, degraded input) triple from the default corpus recipe."""
    cfg = config or default_config()
    spec = dataclasses.replace(cfg.corpus.scene, seed=child_seed(cfg.seed, "scene", seed))
    gt, guide = generate_scene(spec)
    if not degrade:
        return gt, guide, None
    dspec = dataclasses.replace(
        cfg.degradation, seed=child_seed(cfg.degradation.seed, "degrade", seed)
    )
    return gt, guide, apply_spec(gt, dspec)


@pytest.fixture(scope="session")
def fitted_sigma_scale():
    """Calibration scale fitted once on a small held-out corpus."""
    corpus = []
    for i in range(6):
        gt, guide, d_in = build_scene(9000 + i)
        cal = calibrate(guide, d_in, sigma_scale=1.0)
        corpus.append((cal.z0_hat.values, cal.raw_stat, gt.values))
    return fit_sigma_scale(corpus)


@pytest.fixture(scope="session")
def scene_triples():
    """Six deterministic (gt, guide, degraded) triples for pipeline tests."""
    return [build_scene(i) for i in range(6)]


def serial_mean(values) -> float:
    """Compensated serial summation oracle, independent of numpy reductions."""
    arr = np.asarray(values, dtype=np.float64).ravel()
    return math.fsum(float(v) for v in arr) / arr.size
