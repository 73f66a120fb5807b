"""Dense tensor with a tape-based reverse-mode gradient."""

from __future__ import annotations

import contextlib
import weakref
from collections.abc import Callable, Iterator, Sequence
from contextvars import ContextVar
from typing import Any

import numpy as np

from ..errors import ContractViolation, TapeError

BackwardFn = Callable[[np.ndarray], Sequence["np.ndarray | None"]]

_DTYPES = {"float64": np.dtype(np.float64), "float32": np.dtype(np.float32)}
_default_dtype: np.dtype = _DTYPES["float64"]

_tape: ContextVar[ComputationTape | None] = ContextVar("varda_tape", default=None)
_grad_enabled: ContextVar[bool] = ContextVar("varda_grad_enabled", default=True)


def set_default_dtype(name: str) -> None:
    """Switch the precision new tensors are created with ("float64" or "float32")."""
    global _default_dtype
    if name not in _DTYPES:
        raise ContractViolation(f"unsupported dtype {name!r}, expected one of {sorted(_DTYPES)}")
    _default_dtype = _DTYPES[name]


def get_default_dtype() -> np.dtype:
    return _default_dtype


class Tensor:
    """N-dimensional real array with an optional gradient slot.

    Data is never mutated by ops; only ``grad`` accumulates during backward.
    Optimizers update leaf parameters in place between passes.
    """

    __slots__ = ("data", "requires_grad", "grad", "_node", "__weakref__")

    __array_priority__ = 1000

    def __init__(self, data: Any, requires_grad: bool = False, dtype: Any = None) -> None:
        self.data: np.ndarray = np.array(data, dtype=dtype or _default_dtype)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self._node: _Node | None = None

    @classmethod
    def wrap(cls, data: np.ndarray) -> Tensor:
        """Wrap an array produced by an op without copying it."""
        out = cls.__new__(cls)
        out.data = data
        out.requires_grad = False
        out.grad = None
        out._node = None
        return out

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def item(self) -> float:
        if self.size != 1:
            raise ContractViolation(f"item() needs a one-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> Tensor:
        return Tensor.wrap(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    def __len__(self) -> int:
        return self.shape[0]

    # operator sugar; implementations live in ops
    def __add__(self, other: Any) -> Tensor:
        from . import ops

        return ops.add(self, other)

    def __radd__(self, other: Any) -> Tensor:
        from . import ops

        return ops.add(other, self)

    def __sub__(self, other: Any) -> Tensor:
        from . import ops

        return ops.sub(self, other)

    def __rsub__(self, other: Any) -> Tensor:
        from . import ops

        return ops.sub(other, self)

    def __mul__(self, other: Any) -> Tensor:
        from . import ops

        return ops.mul(self, other)

    def __rmul__(self, other: Any) -> Tensor:
        from . import ops

        return ops.mul(other, self)

    def __truediv__(self, other: Any) -> Tensor:
        from . import ops

        return ops.div(self, other)

    def __rtruediv__(self, other: Any) -> Tensor:
        from . import ops

        return ops.div(other, self)

    def __neg__(self) -> Tensor:
        from . import ops

        return ops.neg(self)

    def __matmul__(self, other: Tensor) -> Tensor:
        from . import ops

        return ops.matmul(self, other)


def as_tensor(value: Any) -> Tensor:
    """Return ``value`` unchanged if it is a Tensor, else a constant tensor."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


class _Node:
    __slots__ = ("inputs", "backward_fn", "tape", "consumed", "__weakref__")

    def __init__(self, inputs: tuple[Tensor, ...], backward_fn: BackwardFn, tape: ComputationTape):
        self.inputs = inputs
        self.backward_fn = backward_fn
        self.tape = tape
        self.consumed = False


class ComputationTape:
    """Ordered record of differentiable ops since the last backward pass.

    Records are held weakly: a node lives as long as some tensor downstream of
    it does, so forward passes that are never differentiated do not pile up.
    """

    def __init__(self) -> None:
        self.records: list[weakref.ref[_Node]] = []

    def __len__(self) -> int:
        return sum(1 for ref in self.records if ref() is not None)

    def record(self, out: Tensor, inputs: tuple[Tensor, ...], backward_fn: BackwardFn) -> None:
        node = _Node(inputs, backward_fn, self)
        out._node = node
        out.requires_grad = True
        self.records.append(weakref.ref(node))

    def clear(self) -> None:
        for ref in self.records:
            node = ref()
            if node is not None:
                node.consumed = True
        self.records.clear()

    def backward(self, loss: Tensor) -> None:
        root = loss._node
        if root is None:
            raise ContractViolation("loss was not produced by a recorded op")
        if root.consumed:
            raise TapeError("tape already consumed; run the forward pass again before backward")
        grads: dict[_Node, np.ndarray] = {root: np.ones_like(loss.data)}
        for ref in reversed(self.records):
            node = ref()
            if node is None:
                continue
            g = grads.pop(node, None)
            if g is None:
                continue
            for inp, ig in zip(node.inputs, node.backward_fn(g)):
                if ig is None or not inp.requires_grad:
                    continue
                if inp._node is not None and not inp._node.consumed:
                    prev = grads.get(inp._node)
                    grads[inp._node] = ig if prev is None else prev + ig
                elif inp._node is None:
                    if inp.grad is None:
                        inp.grad = ig.astype(inp.dtype, copy=True)
                    else:
                        inp.grad = inp.grad + ig
        self.clear()


def current_tape() -> ComputationTape:
    """Tape of the calling context; each thread or task gets its own."""
    tape = _tape.get()
    if tape is None:
        tape = ComputationTape()
        _tape.set(tape)
    return tape


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Run ops without recording them."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every reachable leaf that requires grad."""
    if loss.size != 1:
        raise ContractViolation(f"backward needs a scalar loss, got shape {loss.shape}")
    if loss._node is None:
        raise ContractViolation("loss was not produced by a recorded op")
    loss._node.tape.backward(loss)


def result(data: np.ndarray, inputs: tuple[Tensor, ...], backward_fn: BackwardFn) -> Tensor:
    """Wrap an op output and register its backward rule when gradients are needed."""
    out = Tensor.wrap(data)
    if is_grad_enabled() and any(t.requires_grad for t in inputs):
        current_tape().record(out, inputs, backward_fn)
    return out
