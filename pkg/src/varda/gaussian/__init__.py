from .batch import DiagGaussianBatch
from .metrics import (
    kl_to_standard_normal,
    log_kernel_marginals,
    log_kernel_matrix,
    mixture_l2_distance,
    pair_kernel,
    sliced_l2_distance,
)

__all__ = [
    "DiagGaussianBatch",
    "kl_to_standard_normal",
    "log_kernel_marginals",
    "log_kernel_matrix",
    "mixture_l2_distance",
    "pair_kernel",
    "sliced_l2_distance",
]
