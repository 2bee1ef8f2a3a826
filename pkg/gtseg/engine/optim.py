from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from gtseg.engine.tensor import DTYPE, Tensor


@dataclass
class AdamState:
    """
    Bias-corrected Adam moments, one array per parameter in parameter order.
    """

    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    epsilon: float = 1e-8
    step_count: int = 0
    first_moment: List[np.ndarray] = field(default_factory=list)
    second_moment: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not 0.0 <= self.beta1 < 1.0:
            raise ValueError(f"beta1 must lie in [0, 1), got {self.beta1}")
        if not 0.0 <= self.beta2 < 1.0:
            raise ValueError(f"beta2 must lie in [0, 1), got {self.beta2}")
        if self.step_count < 0:
            raise ValueError("step_count cannot be negative")

    @classmethod
    def for_params(cls, params: Sequence[Tensor], **hyper) -> "AdamState":
        state = cls(**hyper)
        state.first_moment = [np.zeros_like(p.data, dtype=DTYPE) for p in params]
        state.second_moment = [np.zeros_like(p.data, dtype=DTYPE) for p in params]
        return state


def adam_step(params: Sequence[Tensor], state: AdamState) -> AdamState:
    """
    One in-place Adam update of ``params``; returns the same ``state``.
    """
    if len(state.first_moment) != len(params) or len(state.second_moment) != len(params):
        raise ValueError(
            f"Adam state tracks {len(state.first_moment)} tensors but {len(params)} params were given"
        )
    for i, p in enumerate(params):
        if p.grad is None:
            raise RuntimeError(f"parameter #{i} with shape {p.shape} has no gradient; run backward first")
        if state.first_moment[i].shape != p.data.shape:
            raise ValueError(
                f"Adam moment #{i} has shape {state.first_moment[i].shape}, parameter has {p.data.shape}"
            )

    state.step_count += 1
    t = state.step_count
    bc1 = 1.0 - state.beta1 ** t
    bc2 = 1.0 - state.beta2 ** t

    for i, p in enumerate(params):
        g = p.grad
        m = state.first_moment[i]
        v = state.second_moment[i]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p.data -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
    return state


class Adam:
    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 2e-4,
        beta1: float = 0.5,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.state = AdamState.for_params(
            self.params, learning_rate=lr, beta1=beta1, beta2=beta2, epsilon=eps
        )

    def step(self) -> None:
        adam_step(self.params, self.state)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None
