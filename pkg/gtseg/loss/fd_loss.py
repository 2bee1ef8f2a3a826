from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import expit

from gtseg.engine.tensor import PROB_EPS, ShapeError, Tensor, _as_tensor, clip, log
from gtseg.loss.contour import Contour, NoForegroundError, extract_contour, resample_contour
from gtseg.loss.descriptor import (
    DegenerateShapeError,
    descriptor_distance,
    fourier_descriptor,
    normalize_descriptor,
)

DEFAULT_BETA = 10.0
DEFAULT_K = 16
DEFAULT_N = 128
THRESHOLD = 0.5
# Unextractable predictions are charged as if their descriptors were this far off.
MAX_DELTA_Z = 1.0


@dataclass(frozen=True)
class ShapeComparison:
    delta_z: float
    factor: float
    degenerate: bool
    reason: Optional[str] = None
    predicted_points: int = 0
    reference_points: int = 0
    predicted_descriptor: Optional[np.ndarray] = None
    reference_descriptor: Optional[np.ndarray] = None


@dataclass
class FDLossDetails:
    bce: float
    loss: float
    comparisons: List[ShapeComparison] = field(default_factory=list)


# -------------------------------------------------------------------
# BCE
# -------------------------------------------------------------------
def _check_target(pred: Tensor, target: np.ndarray) -> np.ndarray:
    target = np.asarray(target, dtype=np.float64)
    if target.shape != pred.shape:
        raise ShapeError(f"prediction shape {pred.shape} differs from target shape {target.shape}")
    if not np.all((target == 0.0) | (target == 1.0)):
        raise ValueError("target mask must be binary (0/1)")
    return target


def bce_map(pred: Tensor, target: np.ndarray) -> Tensor:
    """Per-pixel −[t·log p + (1−t)·log(1−p)] with p clamped to [1e-7, 1−1e-7]."""
    pred = _as_tensor(pred)
    target = _check_target(pred, target)
    p = clip(pred, PROB_EPS, 1.0 - PROB_EPS)
    return -(log(p) * target + log(1.0 - p) * (1.0 - target))


def bce(pred: Tensor, target: np.ndarray) -> Tensor:
    return bce_map(pred, target).mean()


# -------------------------------------------------------------------
# Shape term
# -------------------------------------------------------------------
def shape_descriptor(mask: np.ndarray, k: int, n_points: int, source: str) -> Tuple[Contour, np.ndarray]:
    contour = extract_contour(mask, source=source)
    resampled = resample_contour(contour, n_points)
    return contour, normalize_descriptor(fourier_descriptor(resampled), k)


def compare_shapes(
    predicted_mask: np.ndarray,
    reference_mask: np.ndarray,
    beta: float = DEFAULT_BETA,
    k: int = DEFAULT_K,
    n_points: int = DEFAULT_N,
) -> ShapeComparison:
    """
    ΔZ between the largest predicted and reference components and the
    factor σ(β·ΔZ). Masks that cannot be described fall back to ΔZ = 1.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    try:
        ref_contour, ref_desc = shape_descriptor(reference_mask, k, n_points, "reference")
    except (NoForegroundError, DegenerateShapeError) as exc:
        return _degenerate(beta, f"reference: {exc}")
    try:
        pred_contour, pred_desc = shape_descriptor(predicted_mask, k, n_points, "predicted")
    except (NoForegroundError, DegenerateShapeError) as exc:
        return _degenerate(beta, f"prediction: {exc}", reference_points=len(ref_contour))
    delta = descriptor_distance(pred_desc, ref_desc)
    return ShapeComparison(
        delta_z=delta,
        factor=float(expit(beta * delta)),
        degenerate=False,
        predicted_points=len(pred_contour),
        reference_points=len(ref_contour),
        predicted_descriptor=pred_desc,
        reference_descriptor=ref_desc,
    )


def _degenerate(beta: float, reason: str, reference_points: int = 0) -> ShapeComparison:
    return ShapeComparison(
        delta_z=MAX_DELTA_Z,
        factor=float(expit(beta * MAX_DELTA_Z)),
        degenerate=True,
        reason=reason,
        reference_points=reference_points,
    )


# -------------------------------------------------------------------
# FD loss
# -------------------------------------------------------------------
def fd_loss(
    pred: Tensor,
    target: np.ndarray,
    beta: float = DEFAULT_BETA,
    k: int = DEFAULT_K,
    n_points: int = DEFAULT_N,
    threshold: float = THRESHOLD,
    return_details: bool = False,
):
    """
    Mean over images of BCE_i · σ(β·ΔZ_i).

    The shape factor is computed on thresholded masks and enters as a
    constant weight; gradients flow through the BCE term only.
    """
    pred = _as_tensor(pred)
    if pred.ndim < 2:
        raise ShapeError(f"fd_loss expects at least H×W predictions, got {pred.shape}")
    h, w = pred.shape[-2:]
    per_pixel = bce_map(pred, target)
    images = per_pixel.size // (h * w)

    pred_masks = (pred.data.reshape(images, h, w) >= threshold).astype(np.uint8)
    ref_masks = np.asarray(target).reshape(images, h, w).astype(np.uint8)
    comparisons = [
        compare_shapes(p, r, beta=beta, k=k, n_points=n_points) for p, r in zip(pred_masks, ref_masks)
    ]
    factors = np.array([c.factor for c in comparisons], dtype=np.float64)

    per_image = per_pixel.reshape(images, h * w).mean(axis=1)
    loss = (per_image * factors).mean()
    if return_details:
        details = FDLossDetails(
            bce=float(per_image.data.mean()),
            loss=loss.item(),
            comparisons=comparisons,
        )
        return loss, details
    return loss
