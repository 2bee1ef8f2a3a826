from __future__ import annotations

from typing import List, Optional

import numpy as np

from gtseg.engine.conv import resample2d
from gtseg.engine.tensor import ShapeError, Tensor, concat, relu, sigmoid
from gtseg.model.attention import MHSAWeights, group_merge, group_partition, mhsa_forward
from gtseg.model.config import GTUNetConfig, size_problems
from gtseg.model.layers import BatchNorm2d, Conv2d, Module


class ConvBNReLU(Module):
    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator, kernel_size: int = 3):
        self.conv = Conv2d(in_channels, out_channels, kernel_size, rng, bias=False)
        self.bn = BatchNorm2d(out_channels)

    def forward(self, x: Tensor) -> Tensor:
        return relu(self.bn(self.conv(x)))


class GTBlock(Module):
    """
    Group Transformer block:
    3×3 conv C→C/φ, grouping, shared-weight MHSA per group, merging,
    3×3 conv C/φ→C, then the identity skip.
    """

    def __init__(
        self,
        channels: int,
        group_h: int,
        group_w: int,
        phi: int,
        heads: int,
        rng: np.random.Generator,
    ):
        if channels % phi:
            raise ValueError(f"channels {channels} not divisible by phi={phi}")
        inner = channels // phi
        self.channels = channels
        self.group_h = group_h
        self.group_w = group_w
        self.conv_in = Conv2d(channels, inner, 3, rng, bias=False)
        self.bn_in = BatchNorm2d(inner)
        self.attention = MHSAWeights(inner, heads, group_h, group_w, rng)
        self.conv_out = Conv2d(inner, channels, 3, rng, bias=False)
        self.bn_out = BatchNorm2d(channels)

    def forward(self, x: Tensor) -> Tensor:
        squeeze = x.ndim == 3
        if squeeze:
            x = x.reshape((1,) + x.shape)
        if x.ndim != 4 or x.shape[1] != self.channels:
            raise ShapeError(f"GT block expects N×{self.channels}×H×W, got {x.shape}")
        _, _, h, w = x.shape
        if h % self.group_h or w % self.group_w:
            raise ShapeError(
                f"GT block input {h}×{w} is not divisible by group {self.group_h}×{self.group_w}"
            )
        y = relu(self.bn_in(self.conv_in(x)))
        tokens = group_partition(y, self.group_h, self.group_w)
        attended = mhsa_forward(tokens, self.attention)
        y = group_merge(attended, y.shape, self.group_h, self.group_w)
        out = x + self.bn_out(self.conv_out(y))
        return out.reshape(out.shape[1:]) if squeeze else out


def gt_block_forward(x: Tensor, block: GTBlock) -> Tensor:
    return block(x)


class GTUNet(Module):
    """
    U-shaped encoder/decoder whose stages are GT blocks.

    Encoder level i: GT block -> 2×2 max pool -> 3×3 conv c[i]→c[i+1].
    Decoder level i: nearest ×2 -> 3×3 conv c[i+1]→c[i] -> concat skip ->
    3×3 conv 2c[i]→c[i] -> GT block. Head: 1×1 conv + sigmoid.

    Conv and projection weights are fan-in scaled; biases and relative
    tables start at zero.
    """

    def __init__(self, config: Optional[GTUNetConfig] = None):
        self.config = config or GTUNetConfig()
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        ch = list(cfg.channels_per_level)

        def block(c: int) -> GTBlock:
            return GTBlock(c, cfg.group_h, cfg.group_w, cfg.phi, cfg.heads, rng)

        self.stem = ConvBNReLU(cfg.input_channels, ch[0], rng)
        self.encoders: List[GTBlock] = []
        self.downs: List[ConvBNReLU] = []
        for i in range(cfg.levels - 1):
            self.encoders.append(block(ch[i]))
            self.downs.append(ConvBNReLU(ch[i], ch[i + 1], rng))
        self.bottom = block(ch[-1])
        self.ups: List[ConvBNReLU] = []
        self.fuses: List[ConvBNReLU] = []
        self.decoders: List[GTBlock] = []
        for i in reversed(range(cfg.levels - 1)):
            self.ups.append(ConvBNReLU(ch[i + 1], ch[i], rng))
            self.fuses.append(ConvBNReLU(2 * ch[i], ch[i], rng))
            self.decoders.append(block(ch[i]))
        self.head = Conv2d(ch[0], cfg.output_channels, 1, rng)

    def forward(self, image: Tensor) -> Tensor:
        image = image if isinstance(image, Tensor) else Tensor(image)
        squeeze = image.ndim == 3
        x = image.reshape((1,) + image.shape) if squeeze else image
        if x.ndim != 4 or x.shape[1] != self.config.input_channels:
            raise ShapeError(
                f"GT U-Net expects N×{self.config.input_channels}×H×W input, got {image.shape}"
            )
        problems = size_problems(self.config, x.shape[2], x.shape[3])
        if problems:
            raise ValueError("input size violation: " + "; ".join(problems))

        x = self.stem(x)
        skips = []
        for encoder, down in zip(self.encoders, self.downs):
            x = encoder(x)
            skips.append(x)
            x = down(resample2d(x, "max_pool_down"))
        x = self.bottom(x)
        for up, fuse, decoder, skip in zip(self.ups, self.fuses, self.decoders, reversed(skips)):
            x = up(resample2d(x, "nearest_up"))
            x = fuse(concat([skip, x], axis=1))
            x = decoder(x)
        probs = sigmoid(self.head(x))
        return probs.reshape(probs.shape[1:]) if squeeze else probs


def gtunet_forward(image: Tensor, model: GTUNet) -> Tensor:
    return model(image)
