"""Implementations of the ``varda`` subcommands.

Every command returns its exit code; errors propagate to ``main`` which maps
them to codes.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any

from .. import __version__
from ..config import apply_overrides, flatten, read_kv_file
from ..data import (
    SynthDataset,
    SynthSpec,
    dataset_hash,
    generate,
    load_dataset,
    save_dataset,
)
from ..errors import ConfigError, ContractViolation
from ..networks import Checkpoint, NetConfig, load_checkpoint, require_compatible
from ..objectives import read_loss_curve
from ..trainer import (
    CURVE_FILE,
    FINAL_CHECKPOINT,
    LabelOracle,
    NetworkPredictor,
    TrainConfig,
    TRAIN_PREFIX,
    TrainResult,
    evaluate,
    train,
)
from ..types import MetricsReport
from .manifest import RunManifest
from .verify import VerifySuite

logger = logging.getLogger(__name__)

EVAL_FILE = "eval_metrics.csv"
EVAL_COLUMNS = ("class", "dice_mean", "dice_sd", "assd_mean", "assd_sd", "n_undefined")
GRID_FILE = "grid_summary.csv"
GRID_COLUMNS = (
    "run",
    "seed",
    "alpha1",
    "alpha2",
    "alpha3",
    "decoder_depth",
    "conditioning",
    "iterations",
    "final_total",
    "final_discrepancy",
    "mean_dice",
    "mean_assd",
    "n_undefined",
)
SHAPE_FIELDS = ("height", "width", "channels", "num_classes")


def load_config(path: str | Path | None, sections: dict[str, Any]) -> None:
    """Apply a key=value file onto the given dataclasses, keyed by prefix.

    Keys that no section consumes are rejected with their line number.
    """
    if path is None:
        return
    entries = read_kv_file(path)
    consumed: set[str] = set()
    for prefix, target in sections.items():
        consumed |= apply_overrides(target, dict(entries), prefix)
    leftover = sorted(set(entries) - consumed, key=lambda k: entries[k][1])
    if leftover:
        key = leftover[0]
        raise ConfigError(f"unknown config key {key!r}", line=entries[key][1])


def _write_csv(path: Path, columns: tuple[str, ...], rows: list[dict[str, Any]]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({key: _cell(row.get(key)) for key in columns})
    return path


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


# -- gen ---------------------------------------------------------------------


def cmd_gen(args: argparse.Namespace) -> int:
    spec = SynthSpec()
    load_config(args.config, {"": spec})
    if args.seed is not None:
        spec.seed = args.seed
    out = Path(args.out)
    manifest = RunManifest(
        "gen",
        flatten(spec),
        spec.seed,
        __version__,
        inputs={"config": str(args.config or "")},
        outputs=["manifest.txt", "spec.txt"],
    )
    manifest.write(out)
    save_dataset(generate(spec), out, spec)
    digest = dataset_hash(out)
    manifest.outputs.append(f"sha256:{digest}")
    manifest.finish(out)
    print(f"dataset {out} hash {digest}")
    return 0


# -- train -------------------------------------------------------------------


@dataclass
class RunSettings:
    train: TrainConfig
    net: NetConfig


def _dataset_shape(dataset: SynthDataset) -> dict[str, int]:
    item = dataset.source.items[0]
    channels, height, width = item.image.shape
    return {
        "height": height,
        "width": width,
        "channels": channels,
        "num_classes": item.label.shape[0],
    }


def _check_shape(net: NetConfig, shape: dict[str, int], what: str) -> None:
    diff = [
        f"{key}: {getattr(net, key)!r} != {shape[key]!r} (dataset)"
        for key in SHAPE_FIELDS
        if getattr(net, key) != shape[key]
    ]
    if diff:
        raise ConfigError(f"{what} does not match the dataset", diff=diff)


def resolve_run_settings(
    args: argparse.Namespace, dataset: SynthDataset, base: RunSettings | None = None
) -> RunSettings:
    """Defaults (or a resumed run's settings), then the config file, then flags."""
    if base is None:
        config, net = TrainConfig(), NetConfig(**_dataset_shape(dataset))
    else:
        config, net = base.train, base.net
    load_config(args.config, {"": config, "net.": net})
    _check_shape(net, _dataset_shape(dataset), "network config")

    if args.seed is not None:
        config.seed = net.seed = args.seed
    for k in (1, 2, 3):
        value = getattr(args, f"alpha{k}")
        if value is not None:
            setattr(config.weights, f"alpha{k}", value)
    if args.iters is not None:
        config.iterations = args.iters
    if args.batch is not None:
        config.batch_size = args.batch
    if args.lr is not None:
        config.lr = args.lr
    if args.disc_mode is not None:
        config.disc_mode = args.disc_mode
    if args.decoder_depth is not None:
        net.decoder_depth = args.decoder_depth
    if args.weak:
        net.conditioning = "without_label"
    if args.latent_dim is not None:
        area = net.grid[0] * net.grid[1]
        if args.latent_dim % area:
            raise ConfigError(
                f"--latent-dim {args.latent_dim} is not a multiple of the latent grid "
                f"{net.grid[0]}x{net.grid[1]}"
            )
        net.latent_channels = args.latent_dim // area
    config.validate()
    net.validate()
    return RunSettings(config, net)


def resumed_settings(checkpoint: Checkpoint) -> RunSettings:
    """The training and network settings a checkpoint was written with."""
    config = TrainConfig()
    saved = {
        key[len(TRAIN_PREFIX) :]: (value, None)
        for key, value in checkpoint.manifest.items()
        if key.startswith(TRAIN_PREFIX)
    }
    apply_overrides(config, saved)
    return RunSettings(config, replace(checkpoint.config))


def _run_config(settings: RunSettings) -> dict[str, Any]:
    values: dict[str, Any] = dict(flatten(settings.train))
    values.update({f"net.{k}": v for k, v in flatten(settings.net).items()})
    return values


def train_run(
    settings: RunSettings,
    dataset: SynthDataset,
    out: Path,
    *,
    data_path: str,
    data_hash: str,
    resume: tuple[str, Checkpoint] | None = None,
) -> tuple[TrainResult, MetricsReport]:
    """Train one configuration into ``out`` and score it on the target test split."""
    checkpoint = None
    if resume is not None:
        checkpoint = resume[1]
        require_compatible(settings.net, checkpoint.config, what="run config")
    manifest = RunManifest(
        "train",
        _run_config(settings),
        settings.train.seed,
        __version__,
        inputs={"data": data_path, "resume": resume[0] if resume else ""},
        dataset_hashes={"data": data_hash},
        outputs=[CURVE_FILE, FINAL_CHECKPOINT],
    )
    manifest.write(out)
    result = train(
        settings.train,
        dataset.source,
        dataset.target_train,
        net_config=settings.net,
        resume=checkpoint,
        out_dir=out,
        manifest=manifest.tag(),
    )
    manifest.outputs = [CURVE_FILE] + sorted(p.name for p in out.glob("*.vckp"))
    manifest.finish(out)
    report = evaluate(NetworkPredictor(result.params), dataset.target_test)
    return result, report


def cmd_train(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    resume = None
    base = None
    if args.resume:
        checkpoint = load_checkpoint(args.resume)
        resume, base = (str(args.resume), checkpoint), resumed_settings(checkpoint)
    settings = resolve_run_settings(args, dataset, base)
    result, report = train_run(
        settings,
        dataset,
        Path(args.out),
        data_path=str(args.data),
        data_hash=dataset_hash(args.data),
        resume=resume,
    )
    print(
        f"trained {result.iterations_done} iterations"
        f"{' (early stop)' if result.stopped_early else ''}; "
        f"checkpoint {result.checkpoint_path}; target-test mean Dice {report.mean_dice:.4f}"
    )
    return 0


# -- eval --------------------------------------------------------------------


def summarize(reports: list[MetricsReport]) -> list[dict[str, Any]]:
    """Eval rows of one report, or mean ± SD of per-run means over several."""
    if len(reports) == 1:
        return reports[0].rows()
    per_run = [r.rows() for r in reports]
    rows = []
    for i, first in enumerate(per_run[0]):
        dice = [run[i]["dice_mean"] for run in per_run if not math.isnan(run[i]["dice_mean"])]
        dist = [run[i]["assd_mean"] for run in per_run if run[i]["assd_mean"] is not None]
        rows.append(
            {
                "class": first["class"],
                "dice_mean": _mean(dice),
                "dice_sd": _sd(dice),
                "assd_mean": _mean(dist) if dist else None,
                "assd_sd": _sd(dist) if dist else None,
                "n_undefined": sum(run[i]["n_undefined"] for run in per_run),
            }
        )
    return rows


def _mean(values: list[float]) -> float:
    return math.fsum(values) / len(values) if values else float("nan")


def _sd(values: list[float]) -> float:
    if not values:
        return float("nan")
    mu = _mean(values)
    return math.sqrt(math.fsum((v - mu) ** 2 for v in values) / len(values))


def format_table(rows: list[dict[str, Any]], runs: int) -> str:
    def pair(mean: float | None, sd: float | None, scale: float) -> str:
        if mean is None:
            return "n/a"
        return f"{mean * scale:7.2f} ± {sd * scale:5.2f}"

    header = f"{'class':<12} {'Dice (%)':>17} {'ASSD (px)':>17} {'undef':>6}"
    lines = [f"{runs} run(s)", header, "-" * len(header)]
    for row in rows:
        lines.append(
            f"{row['class']:<12} {pair(row['dice_mean'], row['dice_sd'], 100.0):>17} "
            f"{pair(row['assd_mean'], row['assd_sd'], 1.0):>17} {row['n_undefined']:>6}"
        )
    return "\n".join(lines)


def cmd_eval(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    split = getattr(dataset, args.split)
    shape = _dataset_shape(dataset)
    reports = []
    if args.oracle:
        reports.append(evaluate(LabelOracle(split), split, num_classes=shape["num_classes"]))
    for path in args.checkpoints:
        checkpoint = load_checkpoint(path)
        _check_shape(checkpoint.config, shape, f"checkpoint {path}")
        predictor = NetworkPredictor(checkpoint.params, args.domain)
        reports.append(evaluate(predictor, split, num_classes=shape["num_classes"]))
    if not reports:
        raise ContractViolation("give at least one checkpoint or --oracle")

    rows = summarize(reports)
    print(format_table(rows, len(reports)))
    if args.out:
        out = Path(args.out)
        manifest = RunManifest(
            "eval",
            {"split": args.split, "domain": args.domain, "oracle": args.oracle},
            0,
            __version__,
            inputs={f"checkpoint.{i}": str(p) for i, p in enumerate(args.checkpoints)},
            dataset_hashes={"data": dataset_hash(args.data)},
            outputs=[EVAL_FILE],
        )
        manifest.write(out)
        _write_csv(out / EVAL_FILE, EVAL_COLUMNS, rows)
        manifest.finish(out)
    mean_dice = rows[-1]["dice_mean"]
    if args.min_dice is not None and not mean_dice >= args.min_dice:
        logger.error(f"mean Dice {mean_dice:.4f} below the required {args.min_dice:.4f}")
        return 1
    return 0


# -- verify ------------------------------------------------------------------


def cmd_verify(args: argparse.Namespace) -> int:
    suite = VerifySuite(args.seed if args.seed is not None else 0)
    report = suite.run(args.checks)
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(
            f"{status}  {check.name:<20} max_error={check.max_error:.3g} "
            f"tol={check.tolerance:g} ({check.seconds:.1f}s)"
        )
        if check.name == "gradients":
            for term, err in check.details["max_rel_err"].items():
                print(f"      {term:<12} max rel-err {err:.3g}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
    return 0 if report.passed else 1


# -- grid --------------------------------------------------------------------


def grid_runs(args: argparse.Namespace, base: RunSettings) -> list[tuple[str, RunSettings]]:
    runs = []
    for seed in args.seeds:
        if args.kind == "alpha":
            for a2 in args.alpha2_grid:
                for a3 in args.alpha3_grid:
                    config = replace(base.train, seed=seed)
                    config.weights = replace(base.train.weights, alpha2=a2, alpha3=a3)
                    name = f"alpha2={a2:g}_alpha3={a3:g}_seed{seed}"
                    runs.append((name, RunSettings(config, replace(base.net, seed=seed))))
        else:
            for depth in args.depths:
                # conditioning only reaches the decoder, which N=0 does not have
                conditionings = args.conditionings[:1] if depth == 0 else args.conditionings
                for conditioning in conditionings:
                    net = replace(base.net, decoder_depth=depth, conditioning=conditioning)
                    net.seed = seed
                    name = f"depth{depth}_{conditioning}_seed{seed}"
                    runs.append((name, RunSettings(replace(base.train, seed=seed), net)))
    return runs


def cmd_grid(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    base = resolve_run_settings(args, dataset)
    digest = dataset_hash(args.data)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    runs = grid_runs(args, base)
    logger.info(f"Grid of {len(runs)} run(s) into {out}")
    rows = []
    for name, settings in runs:
        settings.train.validate()
        settings.net.validate()
        result, report = train_run(
            settings, dataset, out / name, data_path=str(args.data), data_hash=digest
        )
        curve = read_loss_curve(result.curve_path) if result.curve_path else []
        last = curve[-1] if curve else {}
        rows.append(
            {
                "run": name,
                "seed": settings.train.seed,
                "alpha1": settings.train.weights.alpha1,
                "alpha2": settings.train.weights.alpha2,
                "alpha3": settings.train.weights.alpha3,
                "decoder_depth": settings.net.decoder_depth,
                "conditioning": settings.net.conditioning,
                "iterations": result.iterations_done,
                "final_total": last.get("total"),
                "final_discrepancy": last.get("discrepancy"),
                "mean_dice": report.mean_dice,
                "mean_assd": report.mean_assd,
                "n_undefined": report.n_undefined,
            }
        )
        _write_csv(out / GRID_FILE, GRID_COLUMNS, rows)
        logger.info(f"{name}: mean Dice {report.mean_dice:.4f}")
    print(f"grid summary {out / GRID_FILE} ({len(rows)} runs)")
    return 0
