"""Append-only CSV of per-iteration loss parts."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

from ..errors import FormatError
from ..types import LossBreakdown

logger = logging.getLogger(__name__)

COLUMNS = ("iter", "seg_loss", "remainder_S", "target_loss", "discrepancy", "total", "lr")


class LossCurveLog:
    """One CSV row per training iteration.

    Opening with ``resume_from=i`` keeps the rows of iterations before ``i``
    and drops any later ones, so a resumed run never duplicates an iteration.
    """

    def __init__(self, path: str | Path, resume_from: int | None = None):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if resume_from is None or not self.path.exists():
            with open(self.path, "w", newline="", encoding="utf-8") as f:
                csv.writer(f).writerow(COLUMNS)
        else:
            self._truncate(resume_from)

    def _truncate(self, resume_from: int) -> None:
        kept = [row for row in read_loss_curve(self.path) if int(row["iter"]) < resume_from]
        with open(self.path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=COLUMNS)
            writer.writeheader()
            for row in kept:
                writer.writerow({key: _fmt(row[key]) for key in COLUMNS})
        logger.info(f"Loss log {self.path} resumed at iteration {resume_from} ({len(kept)} rows)")

    def append(self, iteration: int, breakdown: LossBreakdown, lr: float) -> None:
        row = breakdown.to_row(iteration, lr)
        with open(self.path, "a", newline="", encoding="utf-8") as f:
            csv.writer(f).writerow([_fmt(row[key]) for key in COLUMNS])


def _fmt(value: float | int) -> str:
    return str(value) if isinstance(value, int) else repr(float(value))


def read_loss_curve(path: str | Path) -> list[dict[str, float]]:
    """Parse a loss CSV back into rows of floats (``iter`` as int)."""
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise FormatError(f"unexpected loss-curve header {reader.fieldnames}", line=1)
        rows: list[dict[str, float]] = []
        for lineno, raw in enumerate(reader, start=2):
            try:
                row = {key: float(raw[key]) for key in COLUMNS}
            except (TypeError, ValueError) as err:
                raise FormatError(f"bad loss-curve row {raw}", line=lineno) from err
            row["iter"] = int(row["iter"])
            rows.append(row)
    return rows
