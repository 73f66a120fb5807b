"""Per-class Dice/ASSD evaluation of a predictor over a labeled split."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from ..config import Settings
from ..data import CLASS_NAMES, Split, assd, dice
from ..errors import ContractViolation
from ..networks import ParameterSet, predict
from ..types import ClassMetrics, MetricsReport

logger = logging.getLogger(__name__)


class Predictor(Protocol):
    def predict_labels(self, images: np.ndarray) -> np.ndarray: ...


@dataclass
class NetworkPredictor:
    """Posterior-mean segmentation through one domain's encoder (target by default)."""

    params: ParameterSet
    domain: str = "T"

    def predict_labels(self, images: np.ndarray) -> np.ndarray:
        dtype = self.params["segmentor.head.weight"].dtype
        return predict(self.params, images.astype(dtype), self.domain)[1]


class LabelOracle:
    """Ground-truth injector: answers every image of ``split`` with its stored label."""

    def __init__(self, split: Split):
        self._labels = {item.image.tobytes(): item.label_map for item in split.items}

    def predict_labels(self, images: np.ndarray) -> np.ndarray:
        try:
            return np.stack([self._labels[np.asarray(x).tobytes()] for x in images])
        except KeyError as err:
            raise ContractViolation("the label oracle was asked about an unknown image") from err


ImageScores = list[tuple[float, bool, float | None]]


def _image_scores(pred: np.ndarray, truth: np.ndarray, num_classes: int) -> ImageScores:
    out = []
    for k in range(1, num_classes):
        d = dice(pred, truth, k)
        out.append((d.value, d.vacuous, assd(pred, truth, k)))
    return out


def evaluate_predictions(
    predictions: np.ndarray,
    truths: np.ndarray,
    num_classes: int,
    class_names: tuple[str, ...] = CLASS_NAMES,
) -> MetricsReport:
    """Aggregate foreground-class scores of B×H×W label maps."""
    if predictions.shape != truths.shape:
        raise ContractViolation(f"prediction {predictions.shape} vs truth {truths.shape}")
    per_image = [_image_scores(p, t, num_classes) for p, t in zip(predictions, truths)]
    return _aggregate(per_image, num_classes, class_names)


def _class_name(k: int, class_names: tuple[str, ...]) -> str:
    return class_names[k] if k < len(class_names) else f"class{k}"


def _aggregate(
    per_image: list[ImageScores], num_classes: int, class_names: tuple[str, ...]
) -> MetricsReport:
    classes = [ClassMetrics(k, _class_name(k, class_names)) for k in range(1, num_classes)]
    for scores in per_image:
        for metrics, (value, vacuous, distance) in zip(classes, scores):
            if vacuous:
                metrics.vacuous += 1
            else:
                metrics.dice.append(value)
            metrics.assd.append(distance)
    report = MetricsReport(classes, images=len(per_image))
    for c in classes:
        if c.vacuous:
            logger.warning(f"class {c.name}: {c.vacuous} vacuous empty-vs-empty Dice entries")
    return report


def evaluate(
    model: Predictor | ParameterSet,
    split: Split,
    *,
    num_classes: int | None = None,
    threads: int | None = None,
    chunk: int = 16,
) -> MetricsReport:
    """Predict every image of a labeled split and score it, fanning chunks out to threads.

    Results are gathered in image order, so the report does not depend on
    the thread count.
    """
    if not split.has_labels:
        raise ContractViolation(f"split {split.name} carries no ground truth")
    if isinstance(model, ParameterSet):
        model = NetworkPredictor(model)
    k = num_classes or split.items[0].label.shape[0]
    workers = threads or Settings().threads
    chunks = [list(range(i, min(i + chunk, len(split)))) for i in range(0, len(split), chunk)]

    def run(indices: list[int]) -> list[ImageScores]:
        preds = model.predict_labels(split.images(indices))
        return [
            _image_scores(pred, split.items[i].label_map, k) for pred, i in zip(preds, indices)
        ]

    with ThreadPoolExecutor(max_workers=workers) as pool:
        per_image = [scores for part in pool.map(run, chunks) for scores in part]
    report = _aggregate(per_image, k, CLASS_NAMES)
    logger.info(
        f"Evaluated {report.images} images of {split.name} with {workers} worker(s): "
        f"mean Dice {report.mean_dice:.4f}, undefined ASSD {report.n_undefined}"
    )
    return report
