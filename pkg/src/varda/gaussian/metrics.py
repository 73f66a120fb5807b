"""Closed-form quantities on diagonal Gaussians and their equal-weight mixtures.

All kernels are evaluated in log space and exponentiated per pair; the
product over latent coordinates never materialises, so the full kernel stays
finite for large latent dimension.
"""

from __future__ import annotations

import math

from ..errors import ContractViolation
from ..tensor import Tensor, ops
from .batch import DiagGaussianBatch

LOG_2PI = math.log(2.0 * math.pi)


def kl_to_standard_normal(g: DiagGaussianBatch) -> Tensor:
    """Per-sample KL to N(0, I): ½ Σ_j (λ_j + u_j² − log λ_j − 1), shape (M,)."""
    term = g.variances + ops.square(g.means) - g.log_var - 1.0
    return 0.5 * ops.sum(term, axis=1)


def _check_dims(a: DiagGaussianBatch, b: DiagGaussianBatch) -> None:
    if a.dim != b.dim:
        raise ContractViolation(f"latent dimension mismatch: {a.dim} vs {b.dim}")


def _pairwise(a: DiagGaussianBatch, b: DiagGaussianBatch) -> tuple[Tensor, Tensor]:
    """Squared mean gaps and variance sums for every (i, j) pair, each (Ma, Mb, n)."""
    ma, mb, n = a.size, b.size, a.dim
    grid = (ma, mb, n)
    ua = ops.broadcast_to(ops.reshape(a.means, (ma, 1, n)), grid)
    ub = ops.broadcast_to(ops.reshape(b.means, (1, mb, n)), grid)
    la = ops.broadcast_to(ops.reshape(a.variances, (ma, 1, n)), grid)
    lb = ops.broadcast_to(ops.reshape(b.variances, (1, mb, n)), grid)
    return ops.square(ua - ub), la + lb


def log_kernel_matrix(a: DiagGaussianBatch, b: DiagGaussianBatch) -> Tensor:
    """log ∫ N(z; a_i) N(z; b_j) dz for all pairs, shape (Ma, Mb)."""
    _check_dims(a, b)
    gap2, lam = _pairwise(a, b)
    quad = ops.sum(gap2 / lam, axis=2)
    logdet = ops.sum(ops.log(lam), axis=2)
    return -0.5 * quad - 0.5 * logdet - 0.5 * a.dim * LOG_2PI


def log_kernel_marginals(a: DiagGaussianBatch, b: DiagGaussianBatch) -> Tensor:
    """Per-coordinate 1-D log kernels for all pairs, shape (Ma, Mb, n)."""
    _check_dims(a, b)
    gap2, lam = _pairwise(a, b)
    return -0.5 * (gap2 / lam) - 0.5 * ops.log(lam) - 0.5 * LOG_2PI


def pair_kernel(gi: DiagGaussianBatch, gj: DiagGaussianBatch) -> Tensor:
    """∫ N(z; u_i, Σ_i) N(z; u_j, Σ_j) dz for two single Gaussians, as a scalar tensor."""
    if gi.size != 1 or gj.size != 1:
        raise ContractViolation(f"pair_kernel takes single Gaussians, got M={gi.size}, {gj.size}")
    return ops.reshape(ops.exp(log_kernel_matrix(gi, gj)), ())


def _check_batches(s: DiagGaussianBatch, t: DiagGaussianBatch) -> None:
    if s.size != t.size:
        raise ContractViolation(f"batch size mismatch: M_S={s.size}, M_T={t.size}")
    _check_dims(s, t)


def mixture_l2_distance(s: DiagGaussianBatch, t: DiagGaussianBatch) -> Tensor:
    """∫ (q_S − q_T)² dz between the two equal-weight mixtures of the batches.

    The cross term is summed as k(S,T) + k(T,S) so swapping the arguments
    reproduces the value bit for bit.
    """
    _check_batches(s, t)
    k_ss = ops.sum(ops.exp(log_kernel_matrix(s, s)))
    k_tt = ops.sum(ops.exp(log_kernel_matrix(t, t)))
    k_st = ops.sum(ops.exp(log_kernel_matrix(s, t)))
    k_ts = ops.sum(ops.exp(log_kernel_matrix(t, s)))
    return ((k_ss + k_tt) - (k_st + k_ts)) / float(s.size * s.size)


def sliced_l2_distance(s: DiagGaussianBatch, t: DiagGaussianBatch) -> Tensor:
    """Σ_l ∫ (q_S(z_l) − q_T(z_l))² dz_l, the sum of 1-D marginal mixture distances."""
    _check_batches(s, t)
    k_ss = ops.sum(ops.exp(log_kernel_marginals(s, s)), axis=(0, 1))
    k_tt = ops.sum(ops.exp(log_kernel_marginals(t, t)), axis=(0, 1))
    k_st = ops.sum(ops.exp(log_kernel_marginals(s, t)), axis=(0, 1))
    k_ts = ops.sum(ops.exp(log_kernel_marginals(t, s)), axis=(0, 1))
    per_coord = ((k_ss + k_tt) - (k_st + k_ts)) / float(s.size * s.size)
    return ops.sum(per_coord)
