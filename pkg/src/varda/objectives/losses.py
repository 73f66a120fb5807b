"""Source ELBO, target ELBO and discrepancy terms of the total objective.

Every term is a per-sample mean: KL is averaged over the batch, pixel losses
over batch and pixels, and both ELBO estimates over the L noise draws.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from ..gaussian import (
    DiagGaussianBatch,
    kl_to_standard_normal,
    mixture_l2_distance,
    sliced_l2_distance,
)
from ..networks import (
    ParameterSet,
    decoder_forward,
    encoder_forward,
    reparameterize,
    segmentor_logits,
)
from ..tensor import Tensor, ops
from ..types import LossBreakdown, LossWeights

logger = logging.getLogger(__name__)

DISC_MODES = ("sliced", "full")
PREDICTION_LOSSES = ("ce", "mse")


@dataclass
class ElboTerms:
    """Differentiable parts of one domain's negative ELBO."""

    prediction: Tensor
    recon: Tensor | None
    kl: Tensor

    @property
    def total(self) -> Tensor:
        out = self.prediction + self.kl
        return out if self.recon is None else out + self.recon


def _as_tensor(value: Tensor | np.ndarray, like: Tensor) -> Tensor:
    return value.detach() if isinstance(value, Tensor) else Tensor(value, dtype=like.dtype)


def check_one_hot(y: Tensor, num_classes: int) -> None:
    data = y.data
    if data.ndim != 4 or data.shape[1] != num_classes:
        raise ContractViolation(f"labels must be B×{num_classes}×H×W one-hot, got {data.shape}")
    if not np.all((data == 0) | (data == 1)) or not np.all(data.sum(axis=1) == 1):
        raise ContractViolation("labels are not one-hot: every pixel needs exactly one class")


def mse(x_hat: Tensor, x: Tensor) -> Tensor:
    return ops.mean(ops.square(x_hat - x))


def cross_entropy(y: Tensor, log_probs: Tensor) -> Tensor:
    """−Σ_K y log p, averaged over batch and pixels."""
    return -ops.mean(ops.sum(y * log_probs, axis=1))


def probability_mse(y: Tensor, probs: Tensor) -> Tensor:
    """Σ_K (y − p)², averaged over batch and pixels."""
    return ops.mean(ops.sum(ops.square(y - probs), axis=1))


def conditional_entropy(log_probs: Tensor) -> Tensor:
    """−Σ_K p log p, averaged over batch and pixels."""
    probs = ops.exp(log_probs)
    return -ops.mean(ops.sum(probs * log_probs, axis=1))


def _mean_over_draws(values: list[Tensor]) -> Tensor:
    out = values[0]
    for v in values[1:]:
        out = out + v
    return out / float(len(values)) if len(values) > 1 else out


def source_terms(
    params: ParameterSet,
    g: DiagGaussianBatch,
    x: Tensor,
    y: Tensor,
    eps: Tensor | np.ndarray,
    prediction_loss: str = "ce",
) -> ElboTerms:
    """Negative source ELBO parts given the encoder output ``g``."""
    if prediction_loss not in PREDICTION_LOSSES:
        raise ContractViolation(f"prediction_loss must be one of {PREDICTION_LOSSES}")
    check_one_hot(y, params.config.num_classes)
    z = reparameterize(g, _as_tensor(eps, g.means))
    preds, recons = [], []
    for draw in range(z.shape[1]):
        z_l = ops.take(z, draw, axis=1)
        logits = segmentor_logits(params, z_l)
        if prediction_loss == "ce":
            preds.append(cross_entropy(y, ops.log_softmax(logits, axis=1)))
        else:
            preds.append(probability_mse(y, ops.softmax(logits, axis=1)))
        if params.config.reconstructs:
            recons.append(mse(decoder_forward(params, z_l, y, domain="S"), x))
    kl = ops.mean(kl_to_standard_normal(g))
    recon = _mean_over_draws(recons) if recons else None
    return ElboTerms(_mean_over_draws(preds), recon, kl)


def target_terms(
    params: ParameterSet, g: DiagGaussianBatch, x: Tensor, eps: Tensor | np.ndarray
) -> ElboTerms:
    """Negative target ELBO parts; the decoder is conditioned on the soft pseudo-label."""
    z = reparameterize(g, _as_tensor(eps, g.means))
    entropies, recons = [], []
    for draw in range(z.shape[1]):
        z_l = ops.take(z, draw, axis=1)
        log_probs = ops.log_softmax(segmentor_logits(params, z_l), axis=1)
        entropies.append(conditional_entropy(log_probs))
        if params.config.reconstructs:
            pseudo = ops.exp(log_probs)
            recons.append(mse(decoder_forward(params, z_l, pseudo, domain="T"), x))
    kl = ops.mean(kl_to_standard_normal(g))
    recon = _mean_over_draws(recons) if recons else None
    return ElboTerms(_mean_over_draws(entropies), recon, kl)


def source_elbo_loss(
    params: ParameterSet,
    x: Tensor,
    y: Tensor,
    eps: Tensor | np.ndarray,
    prediction_loss: str = "ce",
) -> tuple[Tensor, ElboTerms]:
    """−L̃_S for a labeled source batch."""
    terms = source_terms(params, encoder_forward(params, x, "S"), x, y, eps, prediction_loss)
    return terms.total, terms


def target_elbo_loss(
    params: ParameterSet, x: Tensor, eps: Tensor | np.ndarray
) -> tuple[Tensor, ElboTerms]:
    """−L̃_T for an unlabeled target batch."""
    terms = target_terms(params, encoder_forward(params, x, "T"), x, eps)
    return terms.total, terms


def discrepancy_loss(gs: DiagGaussianBatch, gt: DiagGaussianBatch, mode: str = "sliced") -> Tensor:
    if mode == "sliced":
        return sliced_l2_distance(gs, gt)
    if mode == "full":
        return mixture_l2_distance(gs, gt)
    raise ContractViolation(f"discrepancy mode must be one of {DISC_MODES}, got {mode!r}")


def _value(t: Tensor | None) -> float:
    return 0.0 if t is None else t.item()


def total_loss(
    params: ParameterSet,
    source: tuple[Tensor, Tensor],
    target: Tensor,
    weights: LossWeights,
    eps_source: Tensor | np.ndarray,
    eps_target: Tensor | np.ndarray,
    *,
    disc_mode: str = "sliced",
    prediction_loss: str = "ce",
) -> LossBreakdown:
    """α1·(−L̃_S) + α2·(−L̃_T) + α3·D̃ on one source and one target minibatch."""
    xs, ys = source
    if xs.shape[0] != target.shape[0]:
        raise ContractViolation(
            f"source and target batches differ in size: {xs.shape[0]} vs {target.shape[0]}"
        )
    gs = encoder_forward(params, xs, "S")
    gt = encoder_forward(params, target, "T")
    src = source_terms(params, gs, xs, ys, eps_source, prediction_loss)
    tgt = target_terms(params, gt, target, eps_target)
    disc = discrepancy_loss(gs, gt, disc_mode)

    total = weights.alpha1 * src.total + weights.alpha2 * tgt.total + weights.alpha3 * disc
    breakdown = LossBreakdown(
        seg_loss=src.prediction.item(),
        recon_loss_S=_value(src.recon),
        kl_S=src.kl.item(),
        recon_loss_T=_value(tgt.recon),
        cond_entropy_T=tgt.prediction.item(),
        kl_T=tgt.kl.item(),
        discrepancy=disc.item(),
        total=total.item(),
        weights=weights,
        tensor=total,
    )
    logger.debug(
        f"loss total={breakdown.total:.6g} seg={breakdown.seg_loss:.6g} "
        f"target={breakdown.target_loss:.6g} disc={breakdown.discrepancy:.6g}"
    )
    return breakdown
