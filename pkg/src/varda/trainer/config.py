from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ContractViolation
from ..objectives import DISC_MODES, PREDICTION_LOSSES
from ..types import LossWeights


@dataclass
class TrainConfig:
    """Optimisation settings of one training run.

    ``iterations`` is the budget; when ``early_stop`` is set the run also ends
    once the mean total loss over the last ``early_stop_window`` iterations
    moves by less than ``early_stop_tol`` (relative) against the window
    before it.
    """

    batch_size: int = 10
    iterations: int = 5000
    samples: int = 1
    lr: float = 1e-4
    decay: float = 0.9
    decay_every: int = 150
    weights: LossWeights = field(default_factory=LossWeights)
    disc_mode: str = "sliced"
    prediction_loss: str = "ce"
    clip_norm: float | None = 10.0
    early_stop: bool = False
    early_stop_window: int = 200
    early_stop_tol: float = 1e-4
    checkpoint_every: int = 500
    log_every: int = 50
    prefetch: int = 0
    seed: int = 0

    def validate(self) -> None:
        if self.batch_size < 1:
            raise ContractViolation(f"batch_size must be >= 1, got {self.batch_size}")
        if self.iterations < 0:
            raise ContractViolation(f"iterations must be >= 0, got {self.iterations}")
        if self.samples < 1:
            raise ContractViolation(f"samples (L) must be >= 1, got {self.samples}")
        if not self.lr > 0:
            raise ContractViolation(f"lr must be positive, got {self.lr}")
        if not 0 < self.decay <= 1:
            raise ContractViolation(f"decay must lie in (0, 1], got {self.decay}")
        if self.decay_every < 1:
            raise ContractViolation(f"decay_every must be >= 1, got {self.decay_every}")
        if self.disc_mode not in DISC_MODES:
            raise ContractViolation(f"disc_mode must be one of {DISC_MODES}")
        if self.prediction_loss not in PREDICTION_LOSSES:
            raise ContractViolation(f"prediction_loss must be one of {PREDICTION_LOSSES}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ContractViolation(f"clip_norm must be positive or none, got {self.clip_norm}")
        if self.early_stop_window < 1:
            raise ContractViolation("early_stop_window must be >= 1")
        if self.checkpoint_every < 0 or self.log_every < 1 or self.prefetch < 0:
            raise ContractViolation("checkpoint_every/prefetch must be >= 0 and log_every >= 1")
        self.weights.validate()
