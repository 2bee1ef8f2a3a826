from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from gtseg.engine.tensor import DTYPE, ShapeError, Tensor, _as_tensor

SUPPORTED_KERNELS = (1, 3)
SUPPORTED_STRIDES = (1, 2)
RESAMPLE_MODES = ("max_pool_down", "nearest_up")


# -------------------------------------------------------------------
# im2col / col2im
# -------------------------------------------------------------------
def output_size(extent: int, kernel: int, stride: int, padding: int) -> int:
    return (extent + 2 * padding - kernel) // stride + 1


def im2col(images: np.ndarray, kernel: int, stride: int, padding: int) -> np.ndarray:
    """
    (N, C, H, W) -> (N * out_h * out_w, C * kernel * kernel), one receptive
    field per row, channel-major inside the row to match the weight layout.
    """
    n, c, h, w = images.shape
    out_h = output_size(h, kernel, stride, padding)
    out_w = output_size(w, kernel, stride, padding)
    padded = np.pad(images, [(0, 0), (0, 0), (padding, padding), (padding, padding)])
    cols = np.empty((n, c, kernel, kernel, out_h, out_w), dtype=images.dtype)
    for dy in range(kernel):
        y_stop = dy + stride * out_h
        for dx in range(kernel):
            x_stop = dx + stride * out_w
            cols[:, :, dy, dx, :, :] = padded[:, :, dy:y_stop:stride, dx:x_stop:stride]
    return cols.transpose(0, 4, 5, 1, 2, 3).reshape(n * out_h * out_w, -1)


def col2im(
    cols: np.ndarray,
    image_shape: Tuple[int, int, int, int],
    kernel: int,
    stride: int,
    padding: int,
) -> np.ndarray:
    """Adjoint of ``im2col``: overlapping receptive fields accumulate."""
    n, c, h, w = image_shape
    out_h = output_size(h, kernel, stride, padding)
    out_w = output_size(w, kernel, stride, padding)
    cols = cols.reshape(n, out_h, out_w, c, kernel, kernel).transpose(0, 3, 4, 5, 1, 2)
    padded = np.zeros((n, c, h + 2 * padding + stride - 1, w + 2 * padding + stride - 1), dtype=cols.dtype)
    for dy in range(kernel):
        y_stop = dy + stride * out_h
        for dx in range(kernel):
            x_stop = dx + stride * out_w
            padded[:, :, dy:y_stop:stride, dx:x_stop:stride] += cols[:, :, dy, dx, :, :]
    return padded[:, :, padding:padding + h, padding:padding + w]


# -------------------------------------------------------------------
# Convolution
# -------------------------------------------------------------------
def conv2d(
    inputs: Tensor,
    weight: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """
    Cross-correlation of (N, C_in, H, W) with (C_out, C_in, k, k).
    """
    inputs, weight = _as_tensor(inputs), _as_tensor(weight)
    if inputs.ndim != 4:
        raise ShapeError(f"conv2d expects N×C×H×W input, got {inputs.shape}")
    if weight.ndim != 4 or weight.shape[2] != weight.shape[3]:
        raise ShapeError(f"conv2d expects C_out×C_in×k×k weight, got {weight.shape}")
    c_out, c_in, k, _ = weight.shape
    if inputs.shape[1] != c_in:
        raise ShapeError(
            f"conv2d channel mismatch: input has {inputs.shape[1]} channels, weight expects {c_in}"
        )
    if k not in SUPPORTED_KERNELS:
        raise ValueError(f"kernel size {k} unsupported; expected one of {SUPPORTED_KERNELS}")
    if stride not in SUPPORTED_STRIDES:
        raise ValueError(f"stride {stride} unsupported; expected one of {SUPPORTED_STRIDES}")
    if bias is not None:
        bias = _as_tensor(bias)
        if bias.shape != (c_out,):
            raise ShapeError(f"conv2d bias must have shape ({c_out},), got {bias.shape}")

    n, _, h, w = inputs.shape
    out_h = output_size(h, k, stride, padding)
    out_w = output_size(w, k, stride, padding)
    if out_h < 1 or out_w < 1:
        raise ShapeError(f"conv2d output would be empty for input {inputs.shape} and kernel {k}")

    cols = im2col(inputs.data, k, stride, padding)
    w_mat = weight.data.reshape(c_out, -1)
    out = cols @ w_mat.T
    if bias is not None:
        out = out + bias.data
    out = out.reshape(n, out_h, out_w, c_out).transpose(0, 3, 1, 2)

    def _backward(g):
        g_rows = g.transpose(0, 2, 3, 1).reshape(-1, c_out)
        g_weight = (g_rows.T @ cols).reshape(weight.shape)
        g_input = col2im(g_rows @ w_mat, inputs.shape, k, stride, padding)
        grads = [g_input, g_weight]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return tuple(grads)

    parents = (inputs, weight) if bias is None else (inputs, weight, bias)
    return Tensor._result(out, parents, _backward, "conv2d")


# -------------------------------------------------------------------
# Resampling (factor 2 over the last two axes)
# -------------------------------------------------------------------
def resample2d(inputs: Tensor, mode: str, factor: int = 2) -> Tensor:
    inputs = _as_tensor(inputs)
    if factor != 2:
        raise ValueError(f"only factor 2 is supported, got {factor}")
    if inputs.ndim < 2:
        raise ShapeError(f"resample2d needs at least 2 axes, got {inputs.shape}")
    if mode == "max_pool_down":
        return _max_pool_down(inputs)
    if mode == "nearest_up":
        return _nearest_up(inputs)
    raise ValueError(f"Unknown resample mode {mode!r}; expected one of {RESAMPLE_MODES}")


def _max_pool_down(x: Tensor) -> Tensor:
    *lead, h, w = x.shape
    if h % 2 or w % 2:
        raise ShapeError(f"max_pool_down needs even spatial extents, got {h}×{w}")
    lead = tuple(lead)
    windows = (
        x.data.reshape(lead + (h // 2, 2, w // 2, 2))
        .swapaxes(-3, -2)
        .reshape(lead + (h // 2, w // 2, 4))
    )
    winner = windows.argmax(axis=-1)
    pooled = np.take_along_axis(windows, winner[..., None], axis=-1)[..., 0]

    def _backward(g):
        routed = np.zeros(windows.shape, dtype=DTYPE)
        np.put_along_axis(routed, winner[..., None], g[..., None], axis=-1)
        routed = routed.reshape(lead + (h // 2, w // 2, 2, 2)).swapaxes(-3, -2)
        return (routed.reshape(lead + (h, w)),)

    return Tensor._result(pooled, (x,), _backward, "max_pool_down")


def _nearest_up(x: Tensor) -> Tensor:
    *lead, h, w = x.shape
    lead = tuple(lead)
    up = np.repeat(np.repeat(x.data, 2, axis=-2), 2, axis=-1)

    def _backward(g):
        return (g.reshape(lead + (h, 2, w, 2)).sum(axis=(-3, -1)),)

    return Tensor._result(up, (x,), _backward, "nearest_up")
