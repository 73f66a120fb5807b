"""Differentiable elementwise, reduction, activation and shape ops."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any

import numpy as np

from ..errors import ContractViolation, DomainError
from .core import Tensor, as_tensor, result

Axis = int | tuple[int, ...] | None


def _is_scalar(t: Tensor) -> bool:
    return t.size == 1 and t.ndim <= 1


def _pair(a: Any, b: Any) -> tuple[Tensor, Tensor]:
    """Promote python scalars / arrays to constants matching the tensor operand's dtype."""
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        return a, Tensor(b, dtype=a.dtype)
    if isinstance(b, Tensor) and not isinstance(a, Tensor):
        return Tensor(a, dtype=b.dtype), b
    return as_tensor(a), as_tensor(b)


def _check_broadcast(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape == b.shape or _is_scalar(a) or _is_scalar(b):
        return
    small, big = (a, b) if a.ndim <= b.ndim else (b, a)
    if big.shape[big.ndim - small.ndim :] == small.shape:
        return
    raise ContractViolation(f"{op}: shapes {a.shape} and {b.shape} do not broadcast")


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    if g.shape == shape:
        return g
    lead = g.ndim - len(shape)
    if lead > 0:
        g = g.sum(axis=tuple(range(lead)))
    keep = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if keep:
        g = g.sum(axis=keep, keepdims=True)
    return g.reshape(shape)


def add(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "add")

    def backward(g: np.ndarray):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return result(a.data + b.data, (a, b), backward)


def sub(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "sub")

    def backward(g: np.ndarray):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return result(a.data - b.data, (a, b), backward)


def mul(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "mul")

    def backward(g: np.ndarray):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return result(a.data * b.data, (a, b), backward)


def div(a: Any, b: Any) -> Tensor:
    a, b = _pair(a, b)
    _check_broadcast(a, b, "div")
    if np.any(b.data == 0):
        raise DomainError("div: denominator contains zeros")
    out = a.data / b.data

    def backward(g: np.ndarray):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return result(out, (a, b), backward)


def neg(a: Tensor) -> Tensor:
    return result(-a.data, (a,), lambda g: (-g,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return result(out, (a,), lambda g: (g * out,))


def log(a: Tensor, clamp_min: float | None = None) -> Tensor:
    """Natural log; without ``clamp_min`` every input must be strictly positive."""
    x = a.data
    if clamp_min is not None:
        mask = x >= clamp_min
        x = np.maximum(x, clamp_min)
    elif np.any(x <= 0):
        raise DomainError("log: input has nonpositive entries")
    else:
        mask = None

    def backward(g: np.ndarray):
        ga = g / x
        return (ga if mask is None else ga * mask,)

    return result(np.log(x), (a,), backward)


def square(a: Tensor) -> Tensor:
    return result(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,))


def sqrt(a: Tensor, clamp_min: float | None = None) -> Tensor:
    x = a.data
    mask = None
    if clamp_min is not None:
        mask = x >= clamp_min
        x = np.maximum(x, clamp_min)
    if np.any(x <= 0):
        raise DomainError("sqrt: input has nonpositive entries")
    out = np.sqrt(x)

    def backward(g: np.ndarray):
        ga = g * 0.5 / out
        return (ga if mask is None else ga * mask,)

    return result(out, (a,), backward)


def clamp(a: Tensor, lo: float | None = None, hi: float | None = None) -> Tensor:
    """Clip into [lo, hi]; the gradient is zero outside the interval."""
    x = a.data
    mask = np.ones(x.shape, dtype=bool)
    if lo is not None:
        mask &= x >= lo
    if hi is not None:
        mask &= x <= hi
    out = np.clip(x, lo, hi)
    return result(out, (a,), lambda g: (g * mask,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return result(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ContractViolation(f"matmul: cannot multiply {a.shape} by {b.shape}")

    def backward(g: np.ndarray):
        return g @ b.data.T, a.data.T @ g

    return result(a.data @ b.data, (a, b), backward)


def _norm_axes(axis: Axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    out = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise ContractViolation(f"axis {ax} out of range for rank {ndim}")
        out.append(ax % ndim)
    return tuple(sorted(set(out)))


def _expand(g: np.ndarray, axes: tuple[int, ...], shape: tuple[int, ...], keepdims: bool):
    if not keepdims:
        g = np.expand_dims(g, axes)
    return np.broadcast_to(g, shape)


def sum(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:  # noqa: A001
    axes = _norm_axes(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)
    return result(np.asarray(out), (a,), lambda g: (_expand(g, axes, a.shape, keepdims),))


def mean(a: Tensor, axis: Axis = None, keepdims: bool = False) -> Tensor:
    axes = _norm_axes(axis, a.ndim)
    count = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    out = a.data.sum(axis=axes, keepdims=keepdims) / count
    return result(np.asarray(out), (a,), lambda g: (_expand(g, axes, a.shape, keepdims) / count,))


def softmax(a: Tensor, axis: int = -1) -> Tensor:
    (ax,) = _norm_axes(axis, a.ndim)
    shifted = a.data - a.data.max(axis=ax, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=ax, keepdims=True)

    def backward(g: np.ndarray):
        return (out * (g - (g * out).sum(axis=ax, keepdims=True)),)

    return result(out, (a,), backward)


def log_softmax(a: Tensor, axis: int = -1) -> Tensor:
    """log(softmax(a)) evaluated without forming the probabilities."""
    (ax,) = _norm_axes(axis, a.ndim)
    shifted = a.data - a.data.max(axis=ax, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=ax, keepdims=True))

    def backward(g: np.ndarray):
        return (g - np.exp(out) * g.sum(axis=ax, keepdims=True),)

    return result(out, (a,), backward)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        out = a.data.reshape(shape)
    except ValueError as err:
        raise ContractViolation(f"reshape: cannot view {a.shape} as {shape}") from err
    return result(out, (a,), lambda g: (g.reshape(a.shape),))


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    axes = tuple(axes)
    if sorted(axes) != list(range(a.ndim)):
        raise ContractViolation(f"transpose: {axes} is not a permutation of rank {a.ndim}")
    inverse = tuple(np.argsort(axes))
    return result(a.data.transpose(axes), (a,), lambda g: (g.transpose(inverse),))


def broadcast_to(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    try:
        out = np.broadcast_to(a.data, shape)
    except ValueError as err:
        raise ContractViolation(f"broadcast_to: cannot expand {a.shape} to {shape}") from err
    return result(out, (a,), lambda g: (_unbroadcast(g, a.shape),))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise ContractViolation("concat needs at least one tensor")
    (ax,) = _norm_axes(axis, tensors[0].ndim)
    try:
        out = np.concatenate([t.data for t in tensors], axis=ax)
    except ValueError as err:
        shapes = [t.shape for t in tensors]
        raise ContractViolation(f"concat: incompatible shapes {shapes}") from err
    bounds = np.cumsum([t.shape[ax] for t in tensors])[:-1]

    def backward(g: np.ndarray):
        return tuple(np.split(g, bounds, axis=ax))

    return result(out, tuple(tensors), backward)


def take(a: Tensor, index: int, axis: int = 0) -> Tensor:
    """Select one slice along ``axis`` (drops the axis)."""
    (ax,) = _norm_axes(axis, a.ndim)
    if not -a.shape[ax] <= index < a.shape[ax]:
        raise ContractViolation(f"take: index {index} out of range for axis of size {a.shape[ax]}")
    out = np.take(a.data, index, axis=ax)

    def backward(g: np.ndarray):
        full = np.zeros(a.shape, dtype=g.dtype)
        slicer = [slice(None)] * a.ndim
        slicer[ax] = index
        full[tuple(slicer)] = g
        return (full,)

    return result(out, (a,), backward)
