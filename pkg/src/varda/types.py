"""Records shared across varda modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

from .errors import ContractViolation


@dataclass
class LossWeights:
    """Trade-off weights of the total objective."""

    alpha1: float = 1.0
    alpha2: float = 1.0
    alpha3: float = 1e-2

    def validate(self) -> None:
        for name in ("alpha1", "alpha2", "alpha3"):
            value = getattr(self, name)
            if not value >= 0:
                raise ContractViolation(f"{name} must be nonnegative, got {value}")


@dataclass
class LossBreakdown:
    """Scalar parts of one evaluation of the total loss.

    ``tensor`` is the differentiable total the parts were read from; it is
    left out of comparisons and repr.
    """

    seg_loss: float
    recon_loss_S: float
    kl_S: float
    recon_loss_T: float
    cond_entropy_T: float
    kl_T: float
    discrepancy: float
    total: float
    weights: LossWeights = field(default_factory=LossWeights)
    tensor: Any = field(default=None, compare=False, repr=False)

    @property
    def source_loss(self) -> float:
        return self.seg_loss + self.recon_loss_S + self.kl_S

    @property
    def remainder_S(self) -> float:
        return self.recon_loss_S + self.kl_S

    @property
    def target_loss(self) -> float:
        return self.recon_loss_T + self.cond_entropy_T + self.kl_T

    def recompute_total(self) -> float:
        w = self.weights
        return (
            w.alpha1 * self.source_loss
            + w.alpha2 * self.target_loss
            + w.alpha3 * self.discrepancy
        )

    def is_finite(self) -> bool:
        parts = (self.source_loss, self.target_loss, self.discrepancy, self.total)
        return all(math.isfinite(v) for v in parts)

    def to_row(self, iteration: int, lr: float) -> dict[str, float | int]:
        return {
            "iter": iteration,
            "seg_loss": self.seg_loss,
            "remainder_S": self.remainder_S,
            "target_loss": self.target_loss,
            "discrepancy": self.discrepancy,
            "total": self.total,
            "lr": lr,
        }


@dataclass
class ClassMetrics:
    """Per-image Dice and ASSD values of one class."""

    index: int
    name: str
    dice: list[float] = field(default_factory=list)
    assd: list[float | None] = field(default_factory=list)
    vacuous: int = 0

    @property
    def n_undefined(self) -> int:
        return sum(1 for v in self.assd if v is None)

    @property
    def defined_assd(self) -> list[float]:
        return [v for v in self.assd if v is not None]

    @property
    def dice_mean(self) -> float:
        return _mean(self.dice)

    @property
    def dice_sd(self) -> float:
        return _sd(self.dice)

    @property
    def assd_mean(self) -> float | None:
        values = self.defined_assd
        return _mean(values) if values else None

    @property
    def assd_sd(self) -> float | None:
        values = self.defined_assd
        return _sd(values) if values else None


@dataclass
class MetricsReport:
    """Per-class Dice/ASSD over a labeled split, plus means over classes.

    Vacuous empty-vs-empty Dice entries are excluded from ``dice`` and only
    counted in ``vacuous``; undefined ASSD entries are kept as ``None`` and
    excluded from every mean.
    """

    classes: list[ClassMetrics]
    images: int = 0

    @property
    def mean_dice(self) -> float:
        return _mean([c.dice_mean for c in self.classes if c.dice])

    @property
    def mean_assd(self) -> float | None:
        values = [c.assd_mean for c in self.classes if c.assd_mean is not None]
        return _mean(values) if values else None

    @property
    def n_undefined(self) -> int:
        return sum(c.n_undefined for c in self.classes)

    def rows(self) -> list[dict[str, Any]]:
        """CSV rows: one per class and a final ``mean`` row."""
        out = [
            {
                "class": c.name,
                "dice_mean": c.dice_mean,
                "dice_sd": c.dice_sd,
                "assd_mean": c.assd_mean,
                "assd_sd": c.assd_sd,
                "n_undefined": c.n_undefined,
            }
            for c in self.classes
        ]
        out.append(
            {
                "class": "mean",
                "dice_mean": self.mean_dice,
                "dice_sd": _sd([c.dice_mean for c in self.classes if c.dice]),
                "assd_mean": self.mean_assd,
                "assd_sd": _sd([c.assd_mean for c in self.classes if c.assd_mean is not None]),
                "n_undefined": self.n_undefined,
            }
        )
        return out


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values) if values else float("nan")


def _sd(values: list[float]) -> float:
    """Population standard deviation; 0 for a single value."""
    if not values:
        return float("nan")
    mu = _mean(values)
    return math.sqrt(math.fsum((v - mu) ** 2 for v in values) / len(values))
