from .curve_log import COLUMNS, LossCurveLog, read_loss_curve
from .losses import (
    DISC_MODES,
    PREDICTION_LOSSES,
    ElboTerms,
    conditional_entropy,
    cross_entropy,
    discrepancy_loss,
    mse,
    probability_mse,
    source_elbo_loss,
    target_elbo_loss,
    total_loss,
)

__all__ = [
    "COLUMNS",
    "DISC_MODES",
    "ElboTerms",
    "LossCurveLog",
    "PREDICTION_LOSSES",
    "conditional_entropy",
    "cross_entropy",
    "discrepancy_loss",
    "mse",
    "probability_mse",
    "read_loss_curve",
    "source_elbo_loss",
    "target_elbo_loss",
    "total_loss",
]
