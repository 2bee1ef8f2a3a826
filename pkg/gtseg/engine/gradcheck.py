"""
Central finite-difference gradient checking.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Sequence, Tuple

import numpy as np

from gtseg.engine.tensor import Tensor, backward, no_grad

DEFAULT_STEP = 1e-4
DEFAULT_TOLERANCE = 1e-5


@dataclass
class GradcheckResult:
    max_relative_error: float
    tolerance: float
    relative_errors: List[float] = field(default_factory=list)
    # worst single entry: error, input position, index inside that input
    max_element_error: float = 0.0
    worst_input: int = 0
    worst_index: Tuple[int, ...] = ()

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    scale = max(float(np.linalg.norm(analytic)), float(np.linalg.norm(numeric)))
    if scale < 1e-12:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / scale)


def element_errors(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """|a - n| scaled by max(|a|, |n|, 1): relative for large entries, absolute for small ones."""
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)


def numeric_gradient(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    step: float = DEFAULT_STEP,
) -> List[np.ndarray]:
    grads = []
    with no_grad():
        for t in inputs:
            if not t.data.flags.c_contiguous:
                t.data = np.ascontiguousarray(t.data)
            flat = t.data.reshape(-1)
            g = np.zeros_like(flat)
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + step
                plus = fn().item()
                flat[i] = original - step
                minus = fn().item()
                flat[i] = original
                g[i] = (plus - minus) / (2.0 * step)
            grads.append(g.reshape(t.data.shape))
    return grads


def gradcheck(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
) -> GradcheckResult:
    """
    Compare autodiff gradients of the scalar ``fn()`` w.r.t. ``inputs`` (all
    requiring grad) with central differences.
    """
    for t in inputs:
        if not t.requires_grad:
            raise ValueError("gradcheck inputs must require grad")
        t.zero_grad()
    backward(fn())
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in inputs]
    numeric = numeric_gradient(fn, inputs, step=step)
    errors = [relative_error(a, n) for a, n in zip(analytic, numeric)]
    result = GradcheckResult(max_relative_error=max(errors), tolerance=tolerance, relative_errors=errors)
    for position, (a, n) in enumerate(zip(analytic, numeric)):
        per_entry = element_errors(np.asarray(a), n)
        if per_entry.size and per_entry.max() > result.max_element_error:
            result.max_element_error = float(per_entry.max())
            result.worst_input = position
            result.worst_index = tuple(int(i) for i in np.unravel_index(per_entry.argmax(), per_entry.shape))
    return result
