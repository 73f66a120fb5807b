"""Dice overlap and average symmetric surface distance on 2-D masks."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy import ndimage
from scipy.spatial.distance import cdist

from ..errors import ContractViolation

# 4-connectivity: a pixel is interior only if all edge neighbours are in the mask
_CROSS = ndimage.generate_binary_structure(2, 1)


class DiceScore(NamedTuple):
    value: float
    vacuous: bool


def _masks(pred: np.ndarray, truth: np.ndarray, k: int | None) -> tuple[np.ndarray, np.ndarray]:
    pred, truth = np.asarray(pred), np.asarray(truth)
    if pred.shape != truth.shape:
        raise ContractViolation(f"mask shapes differ: {pred.shape} vs {truth.shape}")
    if k is None:
        return pred.astype(bool), truth.astype(bool)
    return pred == k, truth == k


def dice(pred: np.ndarray, truth: np.ndarray, k: int | None = None) -> DiceScore:
    """2|P∩T| / (|P|+|T|) for boolean masks, or for class ``k`` of two label maps.

    Two empty masks score 1.0 with ``vacuous`` set.
    """
    p, t = _masks(pred, truth, k)
    total = int(p.sum()) + int(t.sum())
    if total == 0:
        return DiceScore(1.0, True)
    return DiceScore(2.0 * int(np.logical_and(p, t).sum()) / total, False)


def boundary(mask: np.ndarray) -> np.ndarray:
    """Mask pixels 4-adjacent to a non-mask pixel or to the image edge."""
    mask = np.asarray(mask, dtype=bool)
    interior = ndimage.binary_erosion(mask, structure=_CROSS, border_value=0)
    return mask & ~interior


def assd(pred: np.ndarray, truth: np.ndarray, k: int | None = None) -> float | None:
    """Mean over both boundaries of the exact distance to the other boundary.

    Returns None when either mask is empty.
    """
    p, t = _masks(pred, truth, k)
    if not p.any() or not t.any():
        return None
    bp = np.argwhere(boundary(p))
    bt = np.argwhere(boundary(t))
    dist = cdist(bp, bt)
    # correctly rounded sum, independent of element order
    total = math.fsum(np.concatenate([dist.min(axis=1), dist.min(axis=0)]))
    return float(total / (len(bp) + len(bt)))
