from __future__ import annotations

from typing import List

import numpy as np

from gtseg.data.sample import Sample


def patch_sample(sample: Sample, patch_size: int, count: int, seed: int) -> List[Sample]:
    """
    ``count`` square patches at uniform random top-left positions; image and
    mask are cropped identically. Patch ids are ``<id>_p<j>``.
    """
    h, w = sample.shape
    if patch_size < 1:
        raise ValueError(f"patch_size must be >= 1, got {patch_size}")
    if patch_size > h or patch_size > w:
        raise ValueError(f"patch_size {patch_size} exceeds image extent {h}×{w}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")

    rng = np.random.default_rng(seed)
    tops = rng.integers(0, h - patch_size + 1, size=count)
    lefts = rng.integers(0, w - patch_size + 1, size=count)
    patches = []
    for j, (top, left) in enumerate(zip(tops, lefts)):
        window = (slice(top, top + patch_size), slice(left, left + patch_size))
        patches.append(
            Sample(
                image=sample.image[window].copy(),
                mask=sample.mask[window].copy(),
                id=f"{sample.id}_p{j}",
            )
        )
    return patches
