"""VarDA: two segmentation VAEs aligned through a closed-form mixture distance."""

__version__ = "0.1.0"

from .config import Settings
from .errors import (
    ConfigError,
    ContractViolation,
    DomainError,
    FormatError,
    GenerationError,
    NumericalAbort,
    TapeError,
    VardaError,
)
from .types import ClassMetrics, LossBreakdown, LossWeights, MetricsReport

__all__ = [
    "ClassMetrics",
    "ConfigError",
    "ContractViolation",
    "DomainError",
    "FormatError",
    "GenerationError",
    "LossBreakdown",
    "LossWeights",
    "MetricsReport",
    "NumericalAbort",
    "Settings",
    "TapeError",
    "VardaError",
    "__version__",
]
