"""``varda`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Sequence

from .. import __version__
from ..config import Settings
from ..errors import (
    ConfigError,
    ContractViolation,
    FormatError,
    NumericalAbort,
    VardaError,
)
from ..networks import CONDITIONING
from ..objectives import DISC_MODES
from ..tensor import set_default_dtype
from . import commands
from .verify import VerifySuite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_ABORT = 3

DEFAULT_ALPHA2_GRID = (0.1, 1.0, 10.0)
DEFAULT_ALPHA3_GRID = (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
DEFAULT_DEPTHS = (0, 3, 7, 11)


def _float_list(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from err


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}") from err


def _training_flags() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--data", required=True, help="Dataset directory written by `varda gen`")
    parent.add_argument("--out", required=True, help="Output directory")
    parent.add_argument("--config", help="key=value file with TrainConfig and net.* keys")
    parent.add_argument("--seed", type=int, help="Seed for initialisation, batches and noise")
    parent.add_argument("--alpha1", type=float, help="Weight of the source ELBO term")
    parent.add_argument("--alpha2", type=float, help="Weight of the target ELBO term")
    parent.add_argument("--alpha3", type=float, help="Weight of the discrepancy term")
    parent.add_argument("--latent-dim", type=int, help="Latent dimension n (grid area multiple)")
    parent.add_argument("--decoder-depth", type=int, help="Decoder conv layers N (0 disables)")
    parent.add_argument(
        "--weak", action="store_true", help="Decode without the label (weak conditioning)"
    )
    parent.add_argument("--disc-mode", choices=DISC_MODES, help="Full or sliced discrepancy")
    parent.add_argument("--iters", type=int, help="Iteration budget")
    parent.add_argument("--batch", type=int, help="Minibatch size M")
    parent.add_argument("--lr", type=float, help="Initial learning rate")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="varda",
        description="Variational domain adaptation for segmentation on synthetic two-domain data",
    )
    parser.add_argument("--version", action="version", version=f"varda {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate the synthetic two-domain dataset")
    gen.add_argument("--config", help="key=value file with SynthSpec keys")
    gen.add_argument("--seed", type=int, help="Generation seed")
    gen.add_argument("--out", required=True, help="Dataset directory (created if missing)")
    gen.set_defaults(handler=commands.cmd_gen)

    flags = _training_flags()
    train = sub.add_parser("train", parents=[flags], help="Train the two domain VAEs")
    train.add_argument("--resume", help="Checkpoint to continue from")
    train.set_defaults(handler=commands.cmd_train)

    ev = sub.add_parser("eval", help="Per-class Dice/ASSD of one or more checkpoints")
    ev.add_argument("checkpoints", nargs="*", help="Checkpoint files (several: mean ± SD)")
    ev.add_argument("--data", required=True, help="Dataset directory")
    ev.add_argument("--out", help="Directory for eval_metrics.csv and the run manifest")
    ev.add_argument("--split", choices=("target_test", "source"), default="target_test")
    ev.add_argument("--domain", choices=("T", "S"), default="T", help="Encoder used to predict")
    ev.add_argument("--oracle", action="store_true", help="Also score the ground-truth injector")
    ev.add_argument("--min-dice", type=float, help="Exit 1 when the mean Dice is below this")
    ev.set_defaults(handler=commands.cmd_eval)

    verify = sub.add_parser("verify", help="Run the oracle suites")
    verify.add_argument("--seed", type=int, help="Seed of the random instances")
    verify.add_argument("--out", help="Write the JSON report here")
    verify.add_argument(
        "--check",
        dest="checks",
        action="append",
        choices=VerifySuite.CHECKS,
        help="Run only this check (repeatable)",
    )
    verify.set_defaults(handler=commands.cmd_verify)

    grid = sub.add_parser("grid", parents=[flags], help="Train over an ablation grid")
    grid.add_argument("--kind", choices=("alpha", "decoder"), default="alpha")
    grid.add_argument("--alpha2-grid", type=_float_list, default=list(DEFAULT_ALPHA2_GRID))
    grid.add_argument("--alpha3-grid", type=_float_list, default=list(DEFAULT_ALPHA3_GRID))
    grid.add_argument("--depths", type=_int_list, default=list(DEFAULT_DEPTHS))
    grid.add_argument(
        "--conditionings",
        type=lambda text: [part for part in text.split(",") if part],
        default=list(CONDITIONING),
    )
    grid.add_argument("--seeds", type=_int_list, default=[0])
    grid.set_defaults(handler=commands.cmd_grid)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        settings = Settings()
    except ConfigError as err:
        print(f"varda: {err}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=settings.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    set_default_dtype(settings.dtype)
    args = parser.parse_args(argv)
    if args.command == "grid":
        bad = set(args.conditionings) - set(CONDITIONING)
        if bad:
            parser.error(f"unknown conditioning {sorted(bad)}, expected {CONDITIONING}")

    try:
        return args.handler(args)
    except NumericalAbort as err:
        logger.error(f"Numerical abort: {err}")
        for key, value in err.diagnostics.items():
            logger.error(f"  {key}: {value}")
        return EXIT_ABORT
    except (ConfigError, ContractViolation, FormatError, FileNotFoundError) as err:
        logger.error(f"{args.command} failed: {err}", exc_info=logger.isEnabledFor(logging.DEBUG))
        return EXIT_USAGE
    except VardaError as err:
        logger.error(f"{args.command} failed: {err}", exc_info=True)
        return EXIT_FAILURE


def run() -> None:
    sys.exit(main())
