"""Central-difference gradient checks."""

from __future__ import annotations

from collections.abc import Callable, Mapping

import numpy as np

from .core import Tensor, backward, no_grad


def _rel_err(analytic: float, numeric: float, atol: float) -> float:
    diff = abs(analytic - numeric)
    if diff <= atol:
        return 0.0
    return diff / (abs(analytic) + abs(numeric) + 1e-12)


def _pick_coords(size: int, max_coords: int | None, rng: np.random.Generator) -> np.ndarray:
    if max_coords is None or size <= max_coords:
        return np.arange(size)
    return np.sort(rng.choice(size, size=max_coords, replace=False))


def grad_check(
    f: Callable[[Tensor], Tensor],
    point: Tensor | np.ndarray,
    h: float = 1e-6,
    *,
    max_coords: int | None = None,
    seed: int = 0,
    atol: float = 0.0,
) -> float:
    """Max relative error between backward and central differences of scalar ``f``.

    Error per coordinate is |a - cd| / (|a| + |cd| + 1e-12); coordinates whose
    absolute disagreement is at most ``atol`` count as exact.
    """
    base = np.array(point.data if isinstance(point, Tensor) else point, dtype=np.float64)
    x = Tensor(base, requires_grad=True)
    loss = f(x)
    if x.requires_grad and loss._node is not None:
        backward(loss)
    analytic = np.zeros_like(base) if x.grad is None else x.grad

    flat = base.reshape(-1)
    worst = 0.0
    with no_grad():
        for i in _pick_coords(flat.size, max_coords, np.random.default_rng(seed)):
            plus, minus = flat.copy(), flat.copy()
            plus[i] += h
            minus[i] -= h
            fp = f(Tensor(plus.reshape(base.shape))).item()
            fm = f(Tensor(minus.reshape(base.shape))).item()
            worst = max(worst, _rel_err(analytic.reshape(-1)[i], (fp - fm) / (2 * h), atol))
    return worst


def grad_check_params(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Tensor],
    h: float = 1e-6,
    *,
    max_coords: int | None = 16,
    seed: int = 0,
    atol: float = 0.0,
) -> dict[str, float]:
    """Per-parameter max relative error for a closure over trainable tensors.

    Parameters are perturbed in place and restored; their grads are reset.
    """
    for p in params.values():
        p.grad = None
    backward(loss_fn())
    analytic = {
        name: (p.grad if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }

    rng = np.random.default_rng(seed)
    report: dict[str, float] = {}
    with no_grad():
        for name, p in params.items():
            flat = p.data.reshape(-1)
            worst = 0.0
            for i in _pick_coords(flat.size, max_coords, rng):
                saved = flat[i]
                flat[i] = saved + h
                fp = loss_fn().item()
                flat[i] = saved - h
                fm = loss_fn().item()
                flat[i] = saved
                numeric = (fp - fm) / (2 * h)
                worst = max(worst, _rel_err(analytic[name].reshape(-1)[i], numeric, atol))
            report[name] = worst
    for p in params.values():
        p.grad = None
    return report
