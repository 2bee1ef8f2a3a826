from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Sample:
    """
    One grayscale image in [0, 1] with its binary mask of the same shape.
    """

    image: np.ndarray
    mask: np.ndarray
    id: str

    def __post_init__(self) -> None:
        image = np.asarray(self.image, dtype=np.float64)
        mask = np.asarray(self.mask)
        if image.ndim != 2:
            raise ValueError(f"sample {self.id!r}: image must be 2-D, got shape {image.shape}")
        if image.shape != mask.shape:
            raise ValueError(
                f"sample {self.id!r}: image shape {image.shape} differs from mask shape {mask.shape}"
            )
        if not np.all((mask == 0) | (mask == 1)):
            raise ValueError(f"sample {self.id!r}: mask must be strictly binary (0/1)")
        if image.size and (image.min() < 0.0 or image.max() > 1.0):
            raise ValueError(f"sample {self.id!r}: image values must lie in [0, 1]")
        object.__setattr__(self, "image", image)
        object.__setattr__(self, "mask", mask.astype(np.uint8))

    @property
    def shape(self):
        return self.image.shape

    @property
    def foreground_fraction(self) -> float:
        return float(self.mask.mean())
