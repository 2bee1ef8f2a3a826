from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from gtseg.engine.instrument import record_macs

DTYPE = np.float64

# Probabilities are clamped into [PROB_EPS, 1 - PROB_EPS] before any log.
PROB_EPS = 1e-7

BINARY_KINDS = ("add", "sub", "mul", "div")
UNARY_KINDS = ("relu", "sigmoid", "exp", "log", "neg")

BackwardFn = Callable[[np.ndarray], Tuple[Optional[np.ndarray], ...]]
Operand = Union["Tensor", np.ndarray, float, int]


class ShapeError(ValueError):
    """Raised when operand shapes cannot be combined."""


# -------------------------------------------------------------------
# Grad mode (per thread)
# -------------------------------------------------------------------
_grad_mode = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_mode, "enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    previous = is_grad_enabled()
    _grad_mode.enabled = False
    try:
        yield
    finally:
        _grad_mode.enabled = previous


# -------------------------------------------------------------------
# Tensor
# -------------------------------------------------------------------
class Tensor:
    """
    Dense float64 array with optional reverse-mode gradient tracking.

    Every differentiable op returns a new Tensor that remembers its parents and
    a closure mapping the output gradient to one gradient per parent.
    """

    # numpy defers mixed expressions to the reflected Tensor operators
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False):
        self.data: np.ndarray = np.array(data, dtype=DTYPE)
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self._parents: Tuple[Tensor, ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._op = ""

    # -----------------------
    # Construction helpers
    # -----------------------
    @classmethod
    def _result(
        cls,
        data: np.ndarray,
        parents: Sequence["Tensor"],
        backward: BackwardFn,
        op: str,
    ) -> "Tensor":
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=DTYPE)
        out.grad = None
        track = is_grad_enabled() and any(p.requires_grad for p in parents)
        out.requires_grad = track
        out._parents = tuple(parents) if track else ()
        out._backward = backward if track else None
        out._op = op
        return out

    @classmethod
    def zeros(cls, shape, requires_grad: bool = False) -> "Tensor":
        return cls(np.zeros(shape, dtype=DTYPE), requires_grad=requires_grad)

    # -----------------------
    # Introspection
    # -----------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def flat(self) -> np.ndarray:
        """Row-major flat view of the data."""
        return self.data.reshape(-1)

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError(f"item() needs exactly one element, tensor has shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"

    # -----------------------
    # Operators
    # -----------------------
    def __add__(self, other: Operand) -> "Tensor":
        return add(self, other)

    def __radd__(self, other: Operand) -> "Tensor":
        return add(_as_tensor(other), self)

    def __sub__(self, other: Operand) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: Operand) -> "Tensor":
        return sub(_as_tensor(other), self)

    def __mul__(self, other: Operand) -> "Tensor":
        return mul(self, other)

    def __rmul__(self, other: Operand) -> "Tensor":
        return mul(_as_tensor(other), self)

    def __truediv__(self, other: Operand) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other: Operand) -> "Tensor":
        return div(_as_tensor(other), self)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __pow__(self, exponent: float) -> "Tensor":
        return power(self, exponent)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        return matmul(self, other)

    # -----------------------
    # Method forms
    # -----------------------
    def relu(self) -> "Tensor":
        return relu(self)

    def sigmoid(self) -> "Tensor":
        return sigmoid(self)

    def exp(self) -> "Tensor":
        return exp(self)

    def log(self) -> "Tensor":
        return log(self)

    def clip(self, low: float, high: float) -> "Tensor":
        return clip(self, low, high)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tensor_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tensor_mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes)

    def swap_last(self) -> "Tensor":
        axes = list(range(self.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
        return transpose(self, tuple(axes))

    def softmax(self, axis: int = -1) -> "Tensor":
        return softmax(self, axis=axis)

    def backward(self, retain_graph: bool = False) -> None:
        backward(self, retain_graph=retain_graph)


# -------------------------------------------------------------------
# Internal helpers
# -------------------------------------------------------------------
def _as_tensor(value: Operand) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_check(a: Tensor, b: Tensor, kind: str) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise ShapeError(
            f"{kind}: shapes {a.shape} and {b.shape} are not broadcast-compatible"
        ) from exc


def _normalize_axes(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    out = []
    for ax in axis:
        if not -ndim <= ax < ndim:
            raise ValueError(f"axis {ax} out of range for rank {ndim}")
        out.append(ax % ndim)
    return tuple(sorted(out))


# -------------------------------------------------------------------
# Elementwise
# -------------------------------------------------------------------
def add(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_check(a, b, "add")

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._result(a.data + b.data, (a, b), _backward, "add")


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_check(a, b, "sub")

    def _backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return Tensor._result(a.data - b.data, (a, b), _backward, "sub")


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_check(a, b, "mul")

    def _backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor._result(a.data * b.data, (a, b), _backward, "mul")


def div(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_check(a, b, "div")

    def _backward(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return Tensor._result(a.data / b.data, (a, b), _backward, "div")


def neg(a: Operand) -> Tensor:
    a = _as_tensor(a)
    return Tensor._result(-a.data, (a,), lambda g: (-g,), "neg")


def power(a: Operand, exponent: float) -> Tensor:
    a = _as_tensor(a)
    p = float(exponent)

    def _backward(g):
        return (g * p * np.power(a.data, p - 1.0),)

    return Tensor._result(np.power(a.data, p), (a,), _backward, "pow")


def relu(a: Operand) -> Tensor:
    a = _as_tensor(a)

    def _backward(g):
        return (g * (a.data > 0.0),)

    return Tensor._result(np.maximum(a.data, 0.0), (a,), _backward, "relu")


def sigmoid(a: Operand) -> Tensor:
    a = _as_tensor(a)
    y = expit(a.data)

    def _backward(g):
        return (g * y * (1.0 - y),)

    return Tensor._result(y, (a,), _backward, "sigmoid")


def exp(a: Operand) -> Tensor:
    a = _as_tensor(a)
    y = np.exp(a.data)
    return Tensor._result(y, (a,), lambda g: (g * y,), "exp")


def log(a: Operand) -> Tensor:
    a = _as_tensor(a)
    if np.any(a.data <= 0.0):
        raise ValueError("log requires strictly positive inputs; clamp probabilities first")
    return Tensor._result(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def clip(a: Operand, low: float, high: float) -> Tensor:
    a = _as_tensor(a)
    inside = (a.data >= low) & (a.data <= high)
    return Tensor._result(np.clip(a.data, low, high), (a,), lambda g: (g * inside,), "clip")


_BINARY = {"add": add, "sub": sub, "mul": mul, "div": div}
_UNARY = {"relu": relu, "sigmoid": sigmoid, "exp": exp, "log": log, "neg": neg}


def elementwise(op_kind: str, a: Operand, b: Optional[Operand] = None) -> Tensor:
    """
    Dispatch by name: binary kinds need ``b``; unary kinds reject it.
    """
    if op_kind in _BINARY:
        if b is None:
            raise ValueError(f"{op_kind} is binary and needs a second operand")
        return _BINARY[op_kind](a, b)
    if op_kind in _UNARY:
        if b is not None:
            raise ValueError(f"{op_kind} is unary and takes no second operand")
        return _UNARY[op_kind](a)
    raise ValueError(f"Unknown elementwise op {op_kind!r}; expected one of {BINARY_KINDS + UNARY_KINDS}")


# -------------------------------------------------------------------
# Reductions and layout
# -------------------------------------------------------------------
def tensor_sum(a: Operand, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)

    def _backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape),)

    return Tensor._result(a.data.sum(axis=axes, keepdims=keepdims), (a,), _backward, "sum")


def tensor_mean(a: Operand, axis=None, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return tensor_sum(a, axis=axes, keepdims=keepdims) * (1.0 / count)


def reshape(a: Operand, shape: Sequence[int]) -> Tensor:
    a = _as_tensor(a)
    try:
        data = a.data.reshape(tuple(shape))
    except ValueError as exc:
        raise ShapeError(f"cannot reshape {a.shape} into {tuple(shape)}") from exc
    return Tensor._result(data, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a: Operand, axes: Sequence[int]) -> Tensor:
    a = _as_tensor(a)
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))
    return Tensor._result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),), "transpose")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    if not tensors:
        raise ValueError("concat needs at least one tensor")
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as exc:
        shapes = [t.shape for t in tensors]
        raise ShapeError(f"cannot concatenate shapes {shapes} along axis {axis}") from exc
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def _backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return Tensor._result(data, tensors, _backward, "concat")


def gather_last(a: Operand, index: np.ndarray) -> Tensor:
    """
    ``out[..., i, j] = a[..., i, index[i, j]]`` for ``a`` of shape (..., n, r)
    and an integer ``index`` of shape (n, m).
    """
    a = _as_tensor(a)
    index = np.asarray(index, dtype=np.int64)
    n, r = a.shape[-2], a.shape[-1]
    if index.ndim != 2 or index.shape[0] != n:
        raise ShapeError(f"gather index shape {index.shape} does not match rows of {a.shape}")
    if index.min() < 0 or index.max() >= r:
        raise ValueError(f"gather index out of range [0, {r})")
    # one-hot selector (n, m, r) turns the gather into a batched matmul
    selector = np.zeros(index.shape + (r,), dtype=DTYPE)
    np.put_along_axis(selector, index[..., None], 1.0, axis=-1)
    picked = np.matmul(a.data[..., :, None, :], selector.transpose(0, 2, 1))[..., 0, :]

    def _backward(g):
        return (np.matmul(g[..., :, None, :], selector)[..., 0, :],)

    return Tensor._result(picked, (a,), _backward, "gather")


# -------------------------------------------------------------------
# Matmul / softmax
# -------------------------------------------------------------------
def matmul(a: Operand, b: Operand) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim not in (2, 3) or b.ndim not in (2, 3):
        raise ShapeError(f"matmul supports rank 2 or 3 operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    if a.ndim == 3 and b.ndim == 3 and a.shape[0] != b.shape[0]:
        raise ShapeError(f"matmul batch extents differ: {a.shape} @ {b.shape}")

    data = np.matmul(a.data, b.data)
    batch = int(np.prod(data.shape[:-2])) if data.ndim == 3 else 1
    record_macs(batch * a.shape[-2] * a.shape[-1] * b.shape[-1])

    def _backward(g):
        ga = np.matmul(g, np.swapaxes(b.data, -1, -2))
        gb = np.matmul(np.swapaxes(a.data, -1, -2), g)
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor._result(data, (a, b), _backward, "matmul")


def softmax(a: Operand, axis: int = -1) -> Tensor:
    a = _as_tensor(a)
    if not -a.ndim <= axis < a.ndim:
        raise ValueError(f"softmax axis {axis} out of range for shape {a.shape}")
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=axis, keepdims=True)

    def _backward(g):
        return (y * (g - (g * y).sum(axis=axis, keepdims=True)),)

    return Tensor._result(y, (a,), _backward, "softmax")


# -------------------------------------------------------------------
# Reverse pass
# -------------------------------------------------------------------
def _topological_order(root: Tensor) -> List[Tensor]:
    order: List[Tensor] = []
    visited = set()
    stack: List[Tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Tensor, retain_graph: bool = False) -> None:
    """
    Accumulate d(loss)/d(leaf) into ``.grad`` of every reachable leaf that
    requires grad. The tape is released afterwards unless ``retain_graph``.
    """
    if loss.data.size != 1:
        raise ValueError(f"backward needs a single-element loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise RuntimeError("loss does not depend on any tensor that requires grad")

    order = _topological_order(loss)
    grads = {id(loss): np.ones_like(loss.data)}

    for node in reversed(order):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if not node._parents:
            if node.requires_grad:
                node.grad = np.array(g, dtype=DTYPE) if node.grad is None else node.grad + g
            continue
        for parent, pg in zip(node._parents, node._backward(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            grads[key] = grads[key] + pg if key in grads else pg

    if not retain_graph:
        for node in order:
            if node._parents:
                node._parents = ()
                node._backward = None
                node.requires_grad = False
