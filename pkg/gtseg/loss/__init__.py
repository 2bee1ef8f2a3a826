"""
Shape-sensitive loss: contour tracing, Fourier descriptors, BCE and FD loss.
"""
from gtseg.loss.contour import Contour, NoForegroundError, extract_contour, resample_contour
from gtseg.loss.descriptor import (
    DegenerateShapeError,
    DescriptorVector,
    descriptor_distance,
    fourier_descriptor,
    normalize_descriptor,
)
from gtseg.loss.fd_loss import bce, compare_shapes, fd_loss

__all__ = [
    "Contour",
    "DegenerateShapeError",
    "DescriptorVector",
    "NoForegroundError",
    "bce",
    "compare_shapes",
    "descriptor_distance",
    "extract_contour",
    "fd_loss",
    "fourier_descriptor",
    "normalize_descriptor",
    "resample_contour",
]
