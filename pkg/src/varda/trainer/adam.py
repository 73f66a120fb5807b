"""Bias-corrected Adam with a stepped learning-rate schedule."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolation
from ..networks import ParameterSet
from .config import TrainConfig


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: ParameterSet) -> AdamState:
        state = cls()
        for name, p in params.items():
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        return state

    def to_arrays(self) -> dict[str, np.ndarray]:
        out = {f"adam.m.{k}": v for k, v in self.m.items()}
        out.update({f"adam.v.{k}": v for k, v in self.v.items()})
        out["adam.t"] = np.array(self.t, dtype=np.int64)
        return out

    @classmethod
    def from_arrays(cls, arrays: Mapping[str, np.ndarray], params: ParameterSet) -> AdamState:
        state = cls(t=int(arrays["adam.t"]))
        for name, p in params.items():
            m, v = arrays.get(f"adam.m.{name}"), arrays.get(f"adam.v.{name}")
            if m is None or v is None or m.shape != p.shape or v.shape != p.shape:
                raise ContractViolation(f"optimizer state does not match parameter {name!r}")
            state.m[name] = m.astype(p.dtype, copy=True)
            state.v[name] = v.astype(p.dtype, copy=True)
        return state


def lr_at(iteration: int, config: TrainConfig) -> float:
    """lr0 · decay^⌊iteration / decay_every⌋."""
    if iteration < 0:
        raise ContractViolation(f"iteration must be >= 0, got {iteration}")
    return config.lr * config.decay ** (iteration // config.decay_every)


def global_grad_norm(params: ParameterSet) -> float:
    return math.sqrt(
        math.fsum(float(np.sum(p.grad * p.grad)) for _, p in params.items() if p.grad is not None)
    )


def clip_grad_norm(params: ParameterSet, max_norm: float) -> float:
    """Scale all grads so their joint L2 norm is at most ``max_norm``; returns the pre-clip norm."""
    norm = global_grad_norm(params)
    if norm > max_norm:
        scale = max_norm / norm
        for _, p in params.items():
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm


def adam_step(
    params: ParameterSet,
    state: AdamState,
    lr: float,
    grads: Mapping[str, np.ndarray] | None = None,
) -> None:
    """One update of every parameter in place; grads are read from the grad slots
    unless given explicitly, and the slots are cleared afterwards."""
    resolved = {}
    for name, p in params.items():
        g = p.grad if grads is None else grads.get(name)
        if g is None:
            raise ContractViolation(f"parameter {name!r} has no gradient")
        resolved[name] = g

    state.t += 1
    bc1 = 1.0 - state.beta1**state.t
    bc2 = 1.0 - state.beta2**state.t
    for name, p in params.items():
        g = resolved[name]
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
        p.grad = None
