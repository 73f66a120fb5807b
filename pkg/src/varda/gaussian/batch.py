"""Batch of diagonal Gaussians stored as (means, log-variances)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from ..tensor import Tensor, ops


@dataclass
class DiagGaussianBatch:
    """M diagonal Gaussians over an n-dimensional latent.

    Variances are exp(log_var), so they are positive by construction.
    """

    means: Tensor
    log_var: Tensor

    def __post_init__(self) -> None:
        if self.means.ndim != 2 or self.means.shape != self.log_var.shape:
            raise ContractViolation(
                f"means {self.means.shape} and log_var {self.log_var.shape} must both be M×n"
            )
        if min(self.means.shape) < 1:
            raise ContractViolation("a Gaussian batch needs M >= 1 and n >= 1")

    @classmethod
    def from_variances(cls, means, variances, requires_grad: bool = False) -> DiagGaussianBatch:
        """Build from plain arrays; variances must be strictly positive."""
        lam = np.asarray(variances, dtype=np.float64)
        if np.any(lam <= 0):
            raise ContractViolation("variances must be strictly positive")
        u = Tensor(np.atleast_2d(means), requires_grad=requires_grad)
        lv = Tensor(np.log(np.atleast_2d(lam)), requires_grad=requires_grad)
        return cls(u, lv)

    @property
    def size(self) -> int:
        return self.means.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def variances(self) -> Tensor:
        return ops.exp(self.log_var)

    def row(self, i: int) -> DiagGaussianBatch:
        """The i-th Gaussian as a batch of one."""
        u = ops.reshape(ops.take(self.means, i, axis=0), (1, self.dim))
        lv = ops.reshape(ops.take(self.log_var, i, axis=0), (1, self.dim))
        return DiagGaussianBatch(u, lv)

    def detach(self) -> DiagGaussianBatch:
        return DiagGaussianBatch(self.means.detach(), self.log_var.detach())
