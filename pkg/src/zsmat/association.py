"""IoU computation and optimal bipartite matching between detections and tracks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import BBox, BitMask, mask_area, mask_intersection

_TIE_TOL = 1e-10


@dataclass(frozen=True)
class Assignment:
    """Result of matching detections (rows) against tracks (columns)."""

    pairs: tuple[tuple[int, int], ...]
    unmatched_detections: tuple[int, ...]
    unmatched_tracks: tuple[int, ...]


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.area + b.area - inter)


def mask_iou(a: BitMask, b: BitMask) -> float:
    """Intersection over union of two masks; 0.0 when both are empty."""
    inter = mask_intersection(a, b)
    union = mask_area(a) + mask_area(b) - inter
    if union == 0:
        return 0.0
    return inter / union


def iou_matrix(dets: Sequence[BBox], tracks: Sequence[BBox | None]) -> np.ndarray:
    """Pairwise detection/track IoU; a None track box yields a zero column."""
    out = np.zeros((len(dets), len(tracks)))
    for i, d in enumerate(dets):
        for j, t in enumerate(tracks):
            if t is not None:
                out[i, j] = iou(d, t)
    return out


def _best_total(profit: np.ndarray) -> float:
    if profit.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(-profit)
    return float(profit[rows, cols].sum())


def hungarian_match(matrix: np.ndarray | Sequence[Sequence[float]], match_floor: float) -> Assignment:
    """Assignment maximizing total IoU, keeping only pairs with IoU >= match_floor.

    Pairs below the floor contribute nothing and are left unmatched.  Among
    equally good assignments, ties are broken toward the lowest detection
    index, then the lowest track index (implemented by greedily fixing each
    detection to the smallest track index that preserves the optimal total).
    """
    raw = np.asarray(matrix, dtype=float)
    m = np.atleast_2d(raw)
    if m.size == 0:
        if raw.ndim == 2:
            return Assignment((), tuple(range(raw.shape[0])), tuple(range(raw.shape[1])))
        return Assignment((), (), ())
    n_d, n_t = m.shape
    profit = np.where(m >= match_floor, m, 0.0)
    best = _best_total(profit)

    pairs: list[tuple[int, int]] = []
    free_cols = list(range(n_t))
    fixed_gain = 0.0
    open_rows = list(range(n_d))
    for d in range(n_d):
        open_rows.remove(d)
        chosen = None
        for t in free_cols:
            if m[d, t] < match_floor:
                continue
            sub = profit[np.ix_(open_rows, [c for c in free_cols if c != t])]
            if fixed_gain + profit[d, t] + _best_total(sub) >= best - _TIE_TOL:
                chosen = t
                break
        if chosen is not None:
            pairs.append((d, chosen))
            free_cols.remove(chosen)
            fixed_gain += profit[d, chosen]

    matched_d = {d for d, _ in pairs}
    matched_t = {t for _, t in pairs}
    return Assignment(
        pairs=tuple(pairs),
        unmatched_detections=tuple(d for d in range(n_d) if d not in matched_d),
        unmatched_tracks=tuple(t for t in range(n_t) if t not in matched_t),
    )
