"""Brute-force Dice and ASSD used to cross-check the vectorised metrics."""

from __future__ import annotations

import math

import numpy as np


def _pixels(mask: np.ndarray) -> set[tuple[int, int]]:
    rows, cols = np.nonzero(np.asarray(mask, dtype=bool))
    return {(int(r), int(c)) for r, c in zip(rows, cols)}


def brute_dice(pred: np.ndarray, truth: np.ndarray) -> float:
    p, t = _pixels(pred), _pixels(truth)
    if not p and not t:
        return 1.0
    return 2.0 * len(p & t) / (len(p) + len(t))


def brute_boundary(mask: np.ndarray) -> set[tuple[int, int]]:
    pixels = _pixels(mask)
    h, w = np.shape(mask)
    out = set()
    for r, c in pixels:
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            rr, cc = r + dr, c + dc
            if not (0 <= rr < h and 0 <= cc < w) or (rr, cc) not in pixels:
                out.add((r, c))
                break
    return out


def brute_assd(pred: np.ndarray, truth: np.ndarray) -> float | None:
    if not np.any(pred) or not np.any(truth):
        return None
    bp, bt = sorted(brute_boundary(pred)), sorted(brute_boundary(truth))

    def nearest(a: tuple[int, int], others: list[tuple[int, int]]) -> float:
        return min(math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) for b in others)

    total = math.fsum([nearest(a, bt) for a in bp] + [nearest(b, bp) for b in bt])
    return total / (len(bp) + len(bt))
