from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from gtseg.data.sample import Sample


@dataclass(frozen=True)
class AugmentPolicy:
    """
    Independent coin probabilities for each transform. A policy with every
    probability at 0 is the identity.
    """

    crop_prob: float = 0.5
    crop_range: tuple = (0.8, 1.0)
    rot90_prob: float = 0.5
    small_angle_prob: float = 0.5
    max_angle: float = 15.0
    hflip_prob: float = 0.5
    vflip_prob: float = 0.5

    def __post_init__(self) -> None:
        for name in ("crop_prob", "rot90_prob", "small_angle_prob", "hflip_prob", "vflip_prob"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        low, high = self.crop_range
        if not 0.0 < low <= high <= 1.0:
            raise ValueError(f"crop_range must satisfy 0 < low <= high <= 1, got {self.crop_range}")
        if self.max_angle < 0:
            raise ValueError(f"max_angle must be >= 0, got {self.max_angle}")


IDENTITY = AugmentPolicy(0.0, (0.8, 1.0), 0.0, 0.0, 0.0, 0.0, 0.0)


# -------------------------------------------------------------------
# Transforms (image, mask pairs)
# -------------------------------------------------------------------
def hflip(image: np.ndarray, mask: np.ndarray):
    return np.ascontiguousarray(image[:, ::-1]), np.ascontiguousarray(mask[:, ::-1])


def vflip(image: np.ndarray, mask: np.ndarray):
    return np.ascontiguousarray(image[::-1, :]), np.ascontiguousarray(mask[::-1, :])


def rotate90(image: np.ndarray, mask: np.ndarray, k: int = 1):
    """Counter-clockwise by k·90°; a pure pixel permutation on square inputs."""
    return np.ascontiguousarray(np.rot90(image, k)), np.ascontiguousarray(np.rot90(mask, k))


def rotate_small(image: np.ndarray, mask: np.ndarray, angle: float):
    rotated = ndimage.rotate(image, angle, reshape=False, order=1, mode="nearest")
    rotated_mask = ndimage.rotate(mask, angle, reshape=False, order=0, mode="constant", cval=0)
    return np.clip(rotated, 0.0, 1.0), (rotated_mask > 0).astype(np.uint8)


def center_crop_resize(image: np.ndarray, mask: np.ndarray, fraction: float):
    """
    Keep the central ``fraction`` of each axis and resample back to the input
    size: bilinear for the image, nearest for the mask.
    """
    h, w = image.shape
    ch, cw = max(1, int(round(h * fraction))), max(1, int(round(w * fraction)))
    top, left = (h - ch) / 2.0, (w - cw) / 2.0
    rows = top + (np.arange(h) + 0.5) * (ch / h) - 0.5
    cols = left + (np.arange(w) + 0.5) * (cw / w) - 0.5
    grid = np.meshgrid(rows, cols, indexing="ij")
    resized = ndimage.map_coordinates(image, grid, order=1, mode="nearest")
    resized_mask = ndimage.map_coordinates(mask, grid, order=0, mode="nearest")
    return np.clip(resized, 0.0, 1.0), (resized_mask > 0).astype(np.uint8)


# -------------------------------------------------------------------
# Random augmentation
# -------------------------------------------------------------------
def augment(sample: Sample, seed: int, policy: AugmentPolicy = AugmentPolicy()) -> Sample:
    """
    Random center crop, rotation and axial flips, each behind its own coin.
    All draws happen up front so the result depends only on (sample, seed, policy).
    """
    rng = np.random.default_rng(seed)
    coins = rng.random(5)
    fraction = rng.uniform(*policy.crop_range)
    k = int(rng.integers(1, 4))
    angle = rng.uniform(-policy.max_angle, policy.max_angle)

    image, mask = sample.image, sample.mask
    if coins[0] < policy.crop_prob:
        image, mask = center_crop_resize(image, mask, fraction)
    if coins[1] < policy.rot90_prob and image.shape[0] == image.shape[1]:
        image, mask = rotate90(image, mask, k)
    if coins[2] < policy.small_angle_prob and angle != 0.0:
        image, mask = rotate_small(image, mask, angle)
    if coins[3] < policy.hflip_prob:
        image, mask = hflip(image, mask)
    if coins[4] < policy.vflip_prob:
        image, mask = vflip(image, mask)
    return Sample(image=image, mask=mask, id=sample.id)
