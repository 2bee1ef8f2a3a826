"""
Dense tensor engine with reverse-mode autodiff and Adam.
"""
from gtseg.engine.conv import conv2d, resample2d
from gtseg.engine.instrument import MacCounter, count_macs, mac_section
from gtseg.engine.optim import Adam, AdamState, adam_step
from gtseg.engine.tensor import (
    ShapeError,
    Tensor,
    backward,
    concat,
    elementwise,
    gather_last,
    matmul,
    no_grad,
    softmax,
)

__all__ = [
    "Adam",
    "AdamState",
    "MacCounter",
    "ShapeError",
    "Tensor",
    "adam_step",
    "backward",
    "concat",
    "conv2d",
    "count_macs",
    "elementwise",
    "gather_last",
    "mac_section",
    "matmul",
    "no_grad",
    "resample2d",
    "softmax",
]
