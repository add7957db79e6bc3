"""Procedural synthetic scenes: layered depth fields with aligned guides.

Scenes are piecewise-smooth compositions of seeded primitives (full-frame
plane or ramp background, rectangle/disk patches in front), so occlusion
boundaries are sharp and oracles stay exact. The guide is a normalized
intensity field that increases with depth plus per-layer albedo jitter
and a low-amplitude smooth texture, which keeps guide edges coincident
with depth edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fields import DepthField
from .rng import stream

_PATCH_SHAPES = ("rectangle", "disk")
_ALL_SHAPES = ("plane", "ramp", "rectangle", "disk")


@dataclass(frozen=True)
class SceneSpec:
    width: int = 256
    height: int = 256
    layers: int = 2
    depth_min: float = 2.0
    depth_max: float = 12.0
    shapes: tuple[str, ...] = ("plane", "rectangle", "disk")
    seed: int = 0
    layer_depths: tuple[float, ...] | None = None  # pinned back-to-front depths

    def __post_init__(self):
        if self.width < 16 or self.height < 16:
            raise ConfigError("scene dimensions must be >= 16")
        if self.layers < 1:
            raise ConfigError("layer count must be >= 1")
        if not (0 < self.depth_min < self.depth_max):
            raise ConfigError(f"need 0 < depth_min < depth_max, got [{self.depth_min}, {self.depth_max}]")
        if not self.shapes or any(s not in _ALL_SHAPES for s in self.shapes):
            raise ConfigError(f"shape vocabulary must be a non-empty subset of {_ALL_SHAPES}")
        if self.layer_depths is not None:
            depths = tuple(float(d) for d in self.layer_depths)
            if len(depths) != self.layers:
                raise ConfigError("layer_depths length must equal layer count")
            if any(not (self.depth_min <= d <= self.depth_max) for d in depths):
                raise ConfigError("layer_depths must lie within the depth range")
            object.__setattr__(self, "layer_depths", depths)
        object.__setattr__(self, "shapes", tuple(self.shapes))


def _smooth_texture(shape: tuple[int, int], rng: np.random.Generator, amplitude: float) -> np.ndarray:
    h, w = shape
    yy, xx = np.meshgrid(np.arange(h) / h, np.arange(w) / w, indexing="ij")
    texture = np.zeros(shape)
    for _ in range(3):
        fy, fx = rng.uniform(1.0, 4.0, size=2)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        texture += np.sin(2.0 * math.pi * (fy * yy + fx * xx) + phase)
    return amplitude * texture / 3.0


def generate_scene(spec: SceneSpec) -> tuple[DepthField, DepthField]:
    """Seeded (ground truth, guide) pair; both fields fully valid."""
    rng = stream(spec.seed, "scene")
    h, w = spec.height, spec.width
    span = spec.depth_max - spec.depth_min

    if spec.layer_depths is not None:
        depths = list(spec.layer_depths)
    else:
        # Background biased far, foreground layers nearer, all in range.
        background = spec.depth_min + span * rng.uniform(0.7, 1.0)
        fronts = spec.depth_min + span * rng.uniform(0.05, 0.55, size=spec.layers - 1)
        depths = [background] + sorted(fronts, reverse=True)

    patch_shapes = [s for s in spec.shapes if s in _PATCH_SHAPES]
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")

    # Background layer: full-frame plane or ramp.
    depth = np.full((h, w), depths[0])
    label = np.zeros((h, w), dtype=np.int64)
    if "ramp" in spec.shapes and ("plane" not in spec.shapes or rng.random() < 0.5):
        tilt = span * 0.15 * rng.uniform(-1.0, 1.0, size=2)
        depth = depth + tilt[0] * (yy / h - 0.5) + tilt[1] * (xx / w - 0.5)

    for i in range(1, spec.layers):
        cy = rng.uniform(0.2, 0.8) * h
        cx = rng.uniform(0.2, 0.8) * w
        half = rng.uniform(0.14, 0.22) * min(h, w)
        shape = patch_shapes[int(rng.integers(len(patch_shapes)))] if patch_shapes else "plane"
        if shape == "disk":
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= half * half
        elif shape == "rectangle":
            ky = half * rng.uniform(0.6, 1.4)
            kx = half * rng.uniform(0.6, 1.4)
            mask = (np.abs(yy - cy) <= ky) & (np.abs(xx - cx) <= kx)
        else:
            mask = np.ones((h, w), dtype=bool)
        depth[mask] = depths[i]
        label[mask] = i

    depth = np.clip(depth, spec.depth_min, spec.depth_max)

    # Guide tracks normalized depth; albedo jitter stays within layers so
    # intensity edges coincide with occlusion edges.
    guide = (depth - spec.depth_min) / span
    albedo = rng.uniform(-0.08, 0.08, size=spec.layers)
    guide = guide + albedo[label]
    guide = guide + _smooth_texture((h, w), rng, amplitude=0.04)
    lo, hi = float(guide.min()), float(guide.max())
    if hi - lo > 1e-12:
        guide = (guide - lo) / (hi - lo)
    else:
        guide = np.full((h, w), 0.5)

    return DepthField(depth), DepthField(guide)
