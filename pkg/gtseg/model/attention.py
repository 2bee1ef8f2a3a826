from __future__ import annotations

from typing import Sequence, Tuple, Union

import numpy as np

from gtseg.engine.instrument import mac_section
from gtseg.engine.tensor import ShapeError, Tensor, gather_last, matmul, softmax
from gtseg.model.layers import Module, kaiming_normal


# -------------------------------------------------------------------
# Grouping / merging
# -------------------------------------------------------------------
def group_partition(feature: Tensor, group_h: int, group_w: int) -> Tensor:
    """
    Split a C×H×W (or N×C×H×W) feature map into non-overlapping
    group_h×group_w token blocks.

    Returns a tensor of shape (blocks, group_h*group_w, C). Blocks are ordered
    row-major over the group grid (image-major when batched) and tokens
    row-major inside each group.
    """
    batched = feature.ndim == 4
    if feature.ndim not in (3, 4):
        raise ShapeError(f"group_partition expects C×H×W or N×C×H×W, got {feature.shape}")
    x = feature if batched else feature.reshape((1,) + feature.shape)
    n, c, h, w = x.shape
    if h % group_h or w % group_w:
        raise ShapeError(
            f"feature {h}×{w} is not divisible into {group_h}×{group_w} groups"
        )
    gh, gw = h // group_h, w // group_w
    blocks = (
        x.reshape(n, c, gh, group_h, gw, group_w)
        .transpose(0, 2, 4, 3, 5, 1)
        .reshape(n * gh * gw, group_h * group_w, c)
    )
    return blocks


def group_merge(
    blocks: Tensor,
    shape: Union[Sequence[int], Tuple[int, ...]],
    group_h: int,
    group_w: int,
) -> Tensor:
    """Inverse of ``group_partition`` for the given target shape."""
    shape = tuple(shape)
    batched = len(shape) == 4
    if len(shape) not in (3, 4):
        raise ShapeError(f"group_merge target must be C×H×W or N×C×H×W, got {shape}")
    n, c, h, w = shape if batched else (1,) + shape
    if h % group_h or w % group_w:
        raise ShapeError(f"target {h}×{w} is not divisible into {group_h}×{group_w} groups")
    gh, gw = h // group_h, w // group_w
    expected = (n * gh * gw, group_h * group_w, c)
    if blocks.shape != expected:
        raise ShapeError(f"inconsistent block set: got {blocks.shape}, expected {expected} for {shape}")
    merged = (
        blocks.reshape(n, gh, gw, group_h, group_w, c)
        .transpose(0, 5, 1, 3, 2, 4)
        .reshape(n, c, h, w)
    )
    return merged if batched else merged.reshape(c, h, w)


def relative_index(group_h: int, group_w: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Table rows for every (query i, key j) pair: Δy + group_h - 1 and
    Δx + group_w - 1, with Δ measured from query to key.
    """
    ys, xs = np.divmod(np.arange(group_h * group_w), group_w)
    dy = ys[None, :] - ys[:, None]
    dx = xs[None, :] - xs[:, None]
    return dy + group_h - 1, dx + group_w - 1


# -------------------------------------------------------------------
# Multi-head self-attention with relative position logits
# -------------------------------------------------------------------
class MHSAWeights(Module):
    """
    Square q/k/v/o projections over d dims plus the relative tables R_h and
    R_w, shared by every group of a block.
    """

    def __init__(self, dim: int, heads: int, group_h: int, group_w: int, rng: np.random.Generator):
        if dim % heads:
            raise ValueError(f"attention dim {dim} is not divisible by heads={heads}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.group_h = group_h
        self.group_w = group_w
        self.w_q = kaiming_normal(rng, (dim, dim), dim)
        self.w_k = kaiming_normal(rng, (dim, dim), dim)
        self.w_v = kaiming_normal(rng, (dim, dim), dim)
        self.w_o = kaiming_normal(rng, (dim, dim), dim)
        self.rel_h = Tensor(np.zeros((2 * group_h - 1, self.head_dim)), requires_grad=True)
        self.rel_w = Tensor(np.zeros((2 * group_w - 1, self.head_dim)), requires_grad=True)
        self._index_h, self._index_w = relative_index(group_h, group_w)

    def forward(self, tokens: Tensor) -> Tensor:
        return mhsa_forward(tokens, self)


def _split_heads(x: Tensor, heads: int) -> Tensor:
    b, n, d = x.shape
    return x.reshape(b, n, heads, d // heads).transpose(0, 2, 1, 3).reshape(b * heads, n, d // heads)


def _join_heads(x: Tensor, heads: int) -> Tensor:
    bh, n, dh = x.shape
    return x.reshape(bh // heads, heads, n, dh).transpose(0, 2, 1, 3).reshape(bh // heads, n, heads * dh)


def _check_tokens(tokens: Tensor, weights: MHSAWeights) -> None:
    if tokens.ndim != 3:
        raise ShapeError(f"mhsa expects blocks×tokens×dim, got {tokens.shape}")
    area = weights.group_h * weights.group_w
    if tokens.shape[1] != area:
        raise ShapeError(
            f"token count {tokens.shape[1]} does not equal group area "
            f"{weights.group_h}×{weights.group_w}={area}"
        )
    if tokens.shape[2] != weights.dim:
        raise ShapeError(f"token dim {tokens.shape[2]} does not match attention dim {weights.dim}")


def attention_logits(tokens: Tensor, weights: MHSAWeights) -> Tuple[Tensor, Tensor]:
    """
    Per-head logits q·k + q·r with r(Δy, Δx) = R_h[Δy] + R_w[Δx].

    Returns (logits of shape (blocks*heads, n, n), values split into heads).
    """
    _check_tokens(tokens, weights)
    with mac_section("projection"):
        q = matmul(tokens, weights.w_q)
        k = matmul(tokens, weights.w_k)
        v = matmul(tokens, weights.w_v)
    qh, kh, vh = (_split_heads(t, weights.heads) for t in (q, k, v))
    with mac_section("attention"):
        content = matmul(qh, kh.swap_last())
    with mac_section("position"):
        along_h = gather_last(matmul(qh, weights.rel_h.swap_last()), weights._index_h)
        along_w = gather_last(matmul(qh, weights.rel_w.swap_last()), weights._index_w)
    return content + along_h + along_w, vh


def mhsa_forward(tokens: Tensor, weights: MHSAWeights, return_attention: bool = False):
    """
    Self-attention inside every block of ``tokens`` (blocks × n × d).
    """
    logits, vh = attention_logits(tokens, weights)
    attention = softmax(logits, axis=-1)
    with mac_section("attention"):
        context = matmul(attention, vh)
    with mac_section("projection"):
        out = matmul(_join_heads(context, weights.heads), weights.w_o)
    if return_attention:
        return out, attention
    return out
