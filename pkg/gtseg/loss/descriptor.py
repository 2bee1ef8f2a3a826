from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gtseg.loss.contour import Contour

DEGENERATE_SCALE = 1e-12


class DegenerateShapeError(ValueError):
    """Raised when a contour has no first harmonic to normalize by."""


@dataclass(frozen=True)
class DescriptorVector:
    """Complex Fourier coefficients Z(0..N-1) of a closed boundary."""

    coefficients: np.ndarray
    n_points: int

    @property
    def centroid(self) -> complex:
        return complex(self.coefficients[0])


def fourier_descriptor(contour: Contour) -> DescriptorVector:
    """
    Z(k) = (1/N) Σ_m z(m) e^{-j2πmk/N} with z(m) = x_m + j·y_m.
    """
    pts = contour.points
    n = len(pts)
    if n < 4:
        raise ValueError(f"fourier_descriptor needs at least 4 points, got {n}")
    z = pts[:, 0] + 1j * pts[:, 1]
    return DescriptorVector(coefficients=np.fft.fft(z) / n, n_points=n)


def normalize_descriptor(descriptor: DescriptorVector, k: int) -> np.ndarray:
    """
    (|Z(2)|, ..., |Z(K+1)|) / |Z(1)|: drops Z(0) for location, divides by
    |Z(1)| for scale and keeps magnitudes only for rotation and start point.
    """
    if k < 1 or k > descriptor.n_points - 2:
        raise ValueError(f"K must lie in [1, N-2]={descriptor.n_points - 2}, got {k}")
    magnitudes = np.abs(descriptor.coefficients)
    scale = magnitudes[1]
    if scale < DEGENERATE_SCALE:
        raise DegenerateShapeError(f"|Z(1)|={scale:.3e} is too small to normalize")
    return magnitudes[2:k + 2] / scale


def descriptor_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Mean over k of |a(k) - b(k)|."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"descriptor lengths differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("descriptor vectors cannot be empty")
    return float(np.mean(np.abs(a - b)))
