"""The training loop: sample, forward, backward, clip, Adam step, log, checkpoint."""

from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import flatten, format_value
from ..data import Split
from ..errors import ConfigError, NumericalAbort
from ..networks import Checkpoint, NetConfig, ParameterSet, init_params, save_checkpoint
from ..objectives import LossCurveLog, total_loss
from ..tensor import Tensor, backward
from ..types import LossBreakdown
from .adam import AdamState, adam_step, clip_grad_norm, global_grad_norm, lr_at
from .config import TrainConfig
from .sampling import Batch, BatchStream

logger = logging.getLogger(__name__)

CURVE_FILE = "loss_curve.csv"
FINAL_CHECKPOINT = "final.vckp"
TRAIN_PREFIX = "train."
# settings that may change between a checkpoint and its resumed run
_RESUMABLE_KEYS = {"iterations", "checkpoint_every", "log_every", "prefetch", "early_stop"}


@dataclass
class TrainResult:
    params: ParameterSet
    adam: AdamState
    history: list[LossBreakdown] = field(default_factory=list)
    iterations_done: int = 0
    stopped_early: bool = False
    curve_path: Path | None = None
    checkpoint_path: Path | None = None


def train_manifest(config: TrainConfig) -> dict[str, str]:
    return {f"{TRAIN_PREFIX}{k}": format_value(v) for k, v in flatten(config).items()}


def _check_resume(config: TrainConfig, ckpt: Checkpoint) -> None:
    current = train_manifest(config)
    diff = [
        f"{key}: {ckpt.manifest.get(key)!r} != {value!r}"
        for key, value in current.items()
        if key[len(TRAIN_PREFIX) :] not in _RESUMABLE_KEYS and ckpt.manifest.get(key) != value
    ]
    if diff:
        raise ConfigError("training config does not match the resumed checkpoint", diff=diff)


def _converged(recent: deque[float], window: int, tol: float) -> bool:
    if len(recent) < 2 * window:
        return False
    values = list(recent)
    prev = math.fsum(values[:window]) / window
    cur = math.fsum(values[window:]) / window
    return abs(cur - prev) < tol * max(abs(prev), 1e-12)


def _diagnostics(batch: Batch, params: ParameterSet, breakdown: LossBreakdown | None) -> dict:
    info = {
        "iteration": batch.iteration,
        "source_indices": batch.source_indices.tolist(),
        "target_indices": batch.target_indices.tolist(),
        "param_norms": params.norms(),
    }
    if breakdown is not None:
        info["loss"] = {
            "seg_loss": breakdown.seg_loss,
            "remainder_S": breakdown.remainder_S,
            "target_loss": breakdown.target_loss,
            "discrepancy": breakdown.discrepancy,
            "total": breakdown.total,
        }
    return info


def _abort(
    message: str,
    batch: Batch,
    params: ParameterSet,
    breakdown: LossBreakdown | None,
    out_dir: Path | None,
) -> NumericalAbort:
    info = _diagnostics(batch, params, breakdown)
    if out_dir is not None:
        dump = out_dir / "abort_diagnostics.json"
        dump.write_text(json.dumps(info, indent=2, default=str), encoding="utf-8")
        info["dump"] = str(dump)
    logger.error(f"{message} at iteration {batch.iteration}")
    return NumericalAbort(f"{message} at iteration {batch.iteration}", info)


def _state_arrays(adam: AdamState, iteration: int, recent: deque[float]) -> dict[str, np.ndarray]:
    state = adam.to_arrays()
    state["trainer.iteration"] = np.array(iteration, dtype=np.int64)
    if recent:
        state["trainer.recent_totals"] = np.asarray(list(recent), dtype=np.float64)
    return state


def train(
    config: TrainConfig,
    source: Split,
    target: Split,
    *,
    net_config: NetConfig | None = None,
    params: ParameterSet | None = None,
    resume: Checkpoint | None = None,
    out_dir: str | Path | None = None,
    manifest: dict[str, str] | None = None,
) -> TrainResult:
    """Run minibatch optimisation of the total loss from fresh, given or resumed parameters.

    With ``out_dir`` the loss curve goes to ``loss_curve.csv`` there and
    checkpoints to ``ckpt-<iteration>.vckp`` plus ``final.vckp``.
    """
    config.validate()
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    window = 2 * config.early_stop_window

    if resume is not None:
        _check_resume(config, resume)
        params = resume.params
        adam = AdamState.from_arrays(resume.state, params)
        start = int(resume.state["trainer.iteration"])
        saved = resume.state.get("trainer.recent_totals", np.empty(0))
        recent = deque(saved.tolist(), maxlen=window)
        logger.info(f"Resuming training at iteration {start}")
    else:
        if params is None:
            params = init_params(net_config or NetConfig())
        adam = AdamState.for_params(params)
        start = 0
        recent = deque(maxlen=window)

    dtype = params["segmentor.head.weight"].dtype
    stream = BatchStream(
        source,
        target,
        seed=config.seed,
        batch_size=config.batch_size,
        samples=config.samples,
        latent_dim=params.config.latent_dim,
        dtype=dtype,
        prefetch=config.prefetch,
    )
    curve = None
    if out is not None:
        curve = LossCurveLog(out / CURVE_FILE, resume_from=start if resume is not None else None)
    ckpt_manifest = {**train_manifest(config), **(manifest or {})}

    result = TrainResult(params, adam, iterations_done=start)
    result.curve_path = curve.path if curve is not None else None
    logger.info(
        f"Training iterations {start}..{config.iterations - 1}: M={config.batch_size}, "
        f"L={config.samples}, n={params.config.latent_dim}, disc={config.disc_mode}, "
        f"alpha=({config.weights.alpha1}, {config.weights.alpha2}, {config.weights.alpha3})"
    )

    for batch in stream.iterate(start, config.iterations):
        it = batch.iteration
        params.zero_grad()
        breakdown = total_loss(
            params,
            (Tensor(batch.source_images, dtype=dtype), Tensor(batch.source_labels, dtype=dtype)),
            Tensor(batch.target_images, dtype=dtype),
            config.weights,
            batch.eps_source,
            batch.eps_target,
            disc_mode=config.disc_mode,
            prediction_loss=config.prediction_loss,
        )
        if not breakdown.is_finite():
            raise _abort("non-finite loss", batch, params, breakdown, out)
        backward(breakdown.tensor)
        if config.clip_norm is not None:
            grad_norm = clip_grad_norm(params, config.clip_norm)
        else:
            grad_norm = global_grad_norm(params)
        if not math.isfinite(grad_norm):
            raise _abort("non-finite gradient", batch, params, breakdown, out)

        lr = lr_at(it, config)
        adam_step(params, adam, lr)
        breakdown.tensor = None
        result.history.append(breakdown)
        recent.append(breakdown.total)
        if curve is not None:
            curve.append(it, breakdown, lr)
        done = it + 1
        result.iterations_done = done

        if it % config.log_every == 0 or done == config.iterations:
            logger.info(
                f"iter {it}: total={breakdown.total:.5f} seg={breakdown.seg_loss:.5f} "
                f"target={breakdown.target_loss:.5f} disc={breakdown.discrepancy:.5f} "
                f"|g|={grad_norm:.3g} lr={lr:.3g}"
            )
        if out is not None and config.checkpoint_every and done % config.checkpoint_every == 0:
            save_checkpoint(
                out / f"ckpt-{done:06d}.vckp",
                params,
                ckpt_manifest,
                _state_arrays(adam, done, recent),
            )
        converged = _converged(recent, config.early_stop_window, config.early_stop_tol)
        if config.early_stop and converged:
            logger.warning(
                f"Early stop at iteration {it}: {config.early_stop_window}-iteration mean of the "
                f"total loss moved less than {config.early_stop_tol:g} relative"
            )
            result.stopped_early = True
            break

    if out is not None:
        result.checkpoint_path = save_checkpoint(
            out / FINAL_CHECKPOINT,
            params,
            ckpt_manifest,
            _state_arrays(adam, result.iterations_done, recent),
        )
    return result
