from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np
from scipy import ndimage

from gtseg.data.sample import Sample

MIN_SIZE = 16
FOREGROUND_RANGE = (0.05, 0.5)
DOMINANT_COMPONENT = 0.8
NOISE_SIGMA = 0.02
BLUR_SIGMA_RANGE = (1.0, 3.0)
GAIN_RANGE = (0.6, 1.4)
MAX_ATTEMPTS = 200


@dataclass(frozen=True)
class ShapeParams:
    center_y: float
    center_x: float
    radius: float
    lobe: float
    skew: float
    lobe_phase: float
    skew_phase: float
    aspect: float
    rotation: float


def _draw_shape(rng: np.random.Generator, size: int) -> ShapeParams:
    lobe = rng.uniform(0.2, 0.5)
    skew = rng.uniform(0.0, 0.2)
    aspect = rng.uniform(0.55, 1.0)
    fraction = rng.uniform(0.08, 0.35)
    # area of r(θ)=R(1 + a·cos2θ + b·cosθ) is πR²(1 + a²/2 + b²/2), times the aspect squeeze
    radius = size * np.sqrt(fraction / (np.pi * aspect * (1.0 + 0.5 * (lobe ** 2 + skew ** 2))))
    margin = 0.25 * size
    return ShapeParams(
        center_y=rng.uniform(margin, size - margin),
        center_x=rng.uniform(margin, size - margin),
        radius=float(radius),
        lobe=float(lobe),
        skew=float(skew),
        lobe_phase=rng.uniform(0.0, np.pi),
        skew_phase=rng.uniform(0.0, 2.0 * np.pi),
        aspect=float(aspect),
        rotation=rng.uniform(0.0, np.pi),
    )


def shape_mask(params: ShapeParams, size: int) -> np.ndarray:
    """
    Rasterize the star-shaped two-lobed outline: a pixel is foreground when
    its distance from the center is within r(θ) in the rotated, squeezed frame.
    """
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    dy, dx = yy - params.center_y, xx - params.center_x
    cos_r, sin_r = np.cos(params.rotation), np.sin(params.rotation)
    u = cos_r * dx + sin_r * dy
    v = (-sin_r * dx + cos_r * dy) / params.aspect
    theta = np.arctan2(v, u)
    boundary = params.radius * (
        1.0
        + params.lobe * np.cos(2.0 * (theta - params.lobe_phase))
        + params.skew * np.cos(theta - params.skew_phase)
    )
    return (np.hypot(u, v) <= boundary).astype(np.uint8)


def _acceptable(mask: np.ndarray) -> bool:
    fraction = float(mask.mean())
    if not FOREGROUND_RANGE[0] <= fraction <= FOREGROUND_RANGE[1]:
        return False
    labels, count = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if count == 0 or count > 2:
        return False
    sizes = np.bincount(labels.ravel())[1:]
    return sizes.max() >= DOMINANT_COMPONENT * sizes.sum()


def _distractors(rng: np.random.Generator, size: int, contrast: float) -> np.ndarray:
    """1-3 soft elliptical blobs at lower contrast than the structure."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    layer = np.zeros((size, size), dtype=np.float64)
    for _ in range(int(rng.integers(1, 4))):
        cy, cx = rng.uniform(0, size, size=2)
        sy, sx = rng.uniform(0.05, 0.2, size=2) * size
        amplitude = contrast * rng.uniform(0.3, 0.6)
        layer += amplitude * np.exp(-0.5 * (((yy - cy) / sy) ** 2 + ((xx - cx) / sx) ** 2))
    return layer


def render_sample(rng: np.random.Generator, size: int, sample_id: str, blur: bool = True) -> Sample:
    for _ in range(MAX_ATTEMPTS):
        mask = shape_mask(_draw_shape(rng, size), size)
        if _acceptable(mask):
            break
    else:
        raise RuntimeError(f"could not draw an acceptable shape for {sample_id} at size {size}")

    background = rng.uniform(0.1, 0.3)
    foreground = rng.uniform(0.55, 0.8)
    sigma = rng.uniform(*BLUR_SIGMA_RANGE)
    gain = rng.uniform(*GAIN_RANGE)
    contrast = foreground - background

    body = mask.astype(np.float64)
    if blur:
        body = ndimage.gaussian_filter(body, sigma=sigma, mode="nearest")
    image = background + contrast * body + _distractors(rng, size, contrast)
    image = gain * image + rng.normal(0.0, NOISE_SIGMA, size=(size, size))
    return Sample(image=np.clip(image, 0.0, 1.0), mask=mask, id=sample_id)


def synth_generate(seed: int, count: int, size: int, blur: bool = True) -> List[Sample]:
    """
    Synthetic fuzzy-boundary dataset: blurred root-like structures, overlapping
    distractor blobs, random exposure and sensor noise. Sample ``i`` depends
    only on (seed, i, size).
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if size < MIN_SIZE:
        raise ValueError(f"size must be >= {MIN_SIZE}, got {size}")
    samples = []
    for index in range(count):
        rng = np.random.default_rng([int(seed), index])
        samples.append(render_sample(rng, size, f"s{index:04d}", blur=blur))
    return samples
