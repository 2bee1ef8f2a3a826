from __future__ import annotations

from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from gtseg.engine.conv import conv2d
from gtseg.engine.tensor import DTYPE, Tensor, tensor_mean

BN_MOMENTUM = 0.1
BN_EPS = 1e-5


def kaiming_normal(rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int) -> Tensor:
    std = np.sqrt(2.0 / fan_in)
    return Tensor(rng.normal(0.0, std, size=shape), requires_grad=True)


class Module:
    """
    Minimal container: parameters are attributes holding grad-tracking
    Tensors, submodules are attributes (or lists) holding Modules, and
    non-trainable state lives in ``self._buffers``.
    """

    training: bool = True

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def _children(self) -> Iterator[Tuple[str, object]]:
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            yield name, value

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Tensor]]:
        for name, value in self._children():
            full = f"{prefix}{name}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(prefix=f"{full}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(prefix=f"{full}.{i}.")

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, value in getattr(self, "_buffers", {}).items():
            yield f"{prefix}{name}", value
        for name, value in self._children():
            full = f"{prefix}{name}"
            if isinstance(value, Module):
                yield from value.named_buffers(prefix=f"{full}.")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_buffers(prefix=f"{full}.{i}.")

    def modules(self) -> Iterator["Module"]:
        yield self
        for _, value in self._children():
            if isinstance(value, Module):
                yield from value.modules()
            elif isinstance(value, (list, tuple)):
                for item in value:
                    if isinstance(item, Module):
                        yield from item.modules()

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def train(self, mode: bool = True) -> "Module":
        for m in self.modules():
            m.training = mode
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> Dict[str, np.ndarray]:
        state = {name: p.data.copy() for name, p in self.named_parameters()}
        state.update({name: b.copy() for name, b in self.named_buffers()})
        return state

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        params = dict(self.named_parameters())
        buffers = dict(self.named_buffers())
        expected = set(params) | set(buffers)
        missing = sorted(expected - set(state))
        unexpected = sorted(set(state) - expected)
        if missing or unexpected:
            raise ValueError(f"state mismatch. Missing={missing}, Unexpected={unexpected}")
        for name, target in list(params.items()) + [(n, None) for n in buffers]:
            value = np.asarray(state[name], dtype=DTYPE)
            current = target.data if target is not None else buffers[name]
            if value.shape != current.shape:
                raise ValueError(f"{name}: expected shape {current.shape}, got {value.shape}")
            current[...] = value


class Conv2d(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        rng: np.random.Generator,
        stride: int = 1,
        padding: Optional[int] = None,
        bias: bool = True,
    ):
        self.stride = stride
        self.padding = kernel_size // 2 if padding is None else padding
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = kaiming_normal(rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in)
        self.bias = Tensor(np.zeros(out_channels), requires_grad=True) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class BatchNorm2d(Module):
    """
    Per-channel normalization with learnable scale/shift; batch statistics in
    training mode, running statistics in eval mode.
    """

    def __init__(self, channels: int, momentum: float = BN_MOMENTUM, eps: float = BN_EPS):
        self.momentum = momentum
        self.eps = eps
        self.weight = Tensor(np.ones(channels), requires_grad=True)
        self.bias = Tensor(np.zeros(channels), requires_grad=True)
        self._buffers = {
            "running_mean": np.zeros(channels, dtype=DTYPE),
            "running_var": np.ones(channels, dtype=DTYPE),
        }

    def forward(self, x: Tensor) -> Tensor:
        c = x.shape[1]
        scale = self.weight.reshape(1, c, 1, 1)
        shift = self.bias.reshape(1, c, 1, 1)
        if self.training:
            mean = tensor_mean(x, axis=(0, 2, 3), keepdims=True)
            centered = x - mean
            var = tensor_mean(centered * centered, axis=(0, 2, 3), keepdims=True)
            count = x.size // c
            unbiased = var.data.reshape(c) * (count / max(count - 1, 1))
            m = self.momentum
            self._buffers["running_mean"][...] = (1 - m) * self._buffers["running_mean"] + m * mean.data.reshape(c)
            self._buffers["running_var"][...] = (1 - m) * self._buffers["running_var"] + m * unbiased
            return centered * (var + self.eps) ** -0.5 * scale + shift
        mean = self._buffers["running_mean"].reshape(1, c, 1, 1)
        inv_std = 1.0 / np.sqrt(self._buffers["running_var"].reshape(1, c, 1, 1) + self.eps)
        return (x - mean) * inv_std * scale + shift
