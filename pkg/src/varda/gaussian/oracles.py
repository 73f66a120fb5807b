"""Brute-force reference values for the closed forms in ``metrics``.

Composite Simpson quadrature on [min(u) − 10σ_max, max(u) + 10σ_max] per axis,
Monte Carlo KL, and the direct (non-log-space) product form of the kernel.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import simpson

DEFAULT_NODES = 4001
_ROW_CHUNK = 256


def normal_pdf(z: np.ndarray, mean, var) -> np.ndarray:
    return np.exp(-0.5 * (z - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


def _axis_nodes(means: np.ndarray, variances: np.ndarray, nodes: int) -> np.ndarray:
    width = 10.0 * float(np.sqrt(np.max(variances)))
    return np.linspace(float(np.min(means)) - width, float(np.max(means)) + width, nodes)


def _mixture_axis(z: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """Component densities on one axis, shape (len(z), M)."""
    return normal_pdf(z[:, None], means[None, :], variances[None, :])


def quad_mixture_l2(
    s_means, s_vars, t_means, t_vars, nodes: int = DEFAULT_NODES
) -> float:
    """∫ (q_S − q_T)² dz by tensor-grid Simpson; supports n = 1 and n = 2."""
    su, sv = np.atleast_2d(s_means), np.atleast_2d(s_vars)
    tu, tv = np.atleast_2d(t_means), np.atleast_2d(t_vars)
    n = su.shape[1]
    means = np.concatenate([su, tu])
    variances = np.concatenate([sv, tv])
    axes = [_axis_nodes(means[:, d], variances[:, d], nodes) for d in range(n)]
    # signed weights: +1/M for source components, −1/M for target components
    weights = np.concatenate([np.full(len(su), 1.0 / len(su)), np.full(len(tu), -1.0 / len(tu))])
    if n == 1:
        diff = _mixture_axis(axes[0], means[:, 0], variances[:, 0]) @ weights
        return float(simpson(diff**2, x=axes[0]))
    if n != 2:
        raise ValueError(f"grid quadrature supports n <= 2, got {n}")
    cols = _mixture_axis(axes[1], means[:, 1], variances[:, 1]) * weights[None, :]
    inner = np.empty(nodes)
    for start in range(0, nodes, _ROW_CHUNK):
        rows = _mixture_axis(axes[0][start : start + _ROW_CHUNK], means[:, 0], variances[:, 0])
        diff = rows @ cols.T
        inner[start : start + _ROW_CHUNK] = simpson(diff**2, x=axes[1], axis=1)
    return float(simpson(inner, x=axes[0]))


def quad_sliced_l2(s_means, s_vars, t_means, t_vars, nodes: int = DEFAULT_NODES) -> float:
    """Sum over coordinates of 1-D Simpson mixture distances."""
    su, sv = np.atleast_2d(s_means), np.atleast_2d(s_vars)
    tu, tv = np.atleast_2d(t_means), np.atleast_2d(t_vars)
    return sum(
        quad_mixture_l2(su[:, [d]], sv[:, [d]], tu[:, [d]], tv[:, [d]], nodes)
        for d in range(su.shape[1])
    )


def quad_pair_kernel(u1, v1, u2, v2, nodes: int = DEFAULT_NODES) -> float:
    """∫ N(z; u1, v1) N(z; u2, v2) dz by Simpson for n = 1 or n = 2."""
    u1, v1, u2, v2 = (np.atleast_1d(np.asarray(a, dtype=np.float64)) for a in (u1, v1, u2, v2))
    means = np.stack([u1, u2])
    variances = np.stack([v1, v2])
    axes = [_axis_nodes(means[:, d], variances[:, d], nodes) for d in range(len(u1))]
    if len(u1) == 1:
        comps = _mixture_axis(axes[0], means[:, 0], variances[:, 0])
        return float(simpson(comps[:, 0] * comps[:, 1], x=axes[0]))
    if len(u1) != 2:
        raise ValueError(f"grid quadrature supports n <= 2, got {len(u1)}")
    cols = _mixture_axis(axes[1], means[:, 1], variances[:, 1])
    inner = np.empty(nodes)
    for start in range(0, nodes, _ROW_CHUNK):
        rows = _mixture_axis(axes[0][start : start + _ROW_CHUNK], means[:, 0], variances[:, 0])
        prod = (rows[:, None, 0] * cols[None, :, 0]) * (rows[:, None, 1] * cols[None, :, 1])
        inner[start : start + _ROW_CHUNK] = simpson(prod, x=axes[1], axis=1)
    return float(simpson(inner, x=axes[0]))


def monte_carlo_kl(means, variances, samples: int, rng: np.random.Generator) -> float:
    """Sample estimate of KL(N(u, diag λ) || N(0, I)) = E_q[log q(z) − log p(z)]."""
    u = np.asarray(means, dtype=np.float64)
    lam = np.asarray(variances, dtype=np.float64)
    eps = rng.standard_normal((samples, u.size))
    z = u + np.sqrt(lam) * eps
    log_q = -0.5 * np.sum(eps**2 + np.log(2.0 * np.pi * lam), axis=1)
    log_p = -0.5 * np.sum(z**2 + np.log(2.0 * np.pi), axis=1)
    return float(np.mean(log_q - log_p))


def naive_pair_kernel(u1, v1, u2, v2, dtype=np.float32) -> float:
    """The kernel as a direct product over coordinates, in the given precision."""
    u1, v1, u2, v2 = (np.asarray(a, dtype=dtype).reshape(-1) for a in (u1, v1, u2, v2))
    lam = v1 + v2
    numerator = np.exp(dtype(-0.5) * np.sum((u1 - u2) ** 2 / lam, dtype=dtype))
    denominator = dtype(1.0)
    with np.errstate(over="ignore", under="ignore"):
        for value in lam:
            denominator = denominator * dtype(2.0 * np.pi) * value
        return float(numerator / np.sqrt(denominator))
