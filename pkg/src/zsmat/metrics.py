"""Tracking evaluation: the HOTA family plus the classic CLEAR/identity set.

Evaluation is box-level: predicted masks are converted to boxes upstream, and
per-frame similarity is plain IoU.  The HOTA computation follows the
reference evaluator's construction: a first pass accumulates a global
alignment score between every ground-truth/prediction id pair, a second pass
matches per frame by maximizing alignment-weighted similarity, and the
matched pairs are thresholded at 19 levels alpha = 0.05 ... 0.95.  Reported
scalars are means over the alpha grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .association import iou
from .errors import ValidationError
from .geometry import BBox

ALPHAS = tuple(round(0.05 * i, 2) for i in range(1, 20))
CLEAR_THRESHOLD = 0.5

# frame -> [(track_id, box), ...]
TrackTable = Mapping[int, Sequence[tuple[int, BBox]]]

_EPS = float(np.finfo("float").eps)


@dataclass(frozen=True)
class SequenceEval:
    hota: float
    deta: float
    assa: float
    detre: float
    loca: float
    mota: float
    idf1: float
    idsw: int


def _dense_ids(table: TrackTable) -> dict[int, int]:
    ids = sorted({tid for rows in table.values() for tid, _ in rows})
    return {tid: i for i, tid in enumerate(ids)}


def evaluate(gt: TrackTable, pred: TrackTable, alphas: Sequence[float] = ALPHAS) -> SequenceEval:
    """Score one sequence of predictions against ground truth.

    Raises ValidationError when a prediction frame repeats a track id.
    """
    for frame, rows in pred.items():
        ids = [tid for tid, _ in rows]
        if len(ids) != len(set(ids)):
            raise ValidationError(f"prediction frame {frame} repeats a track id")

    frames = sorted(set(gt.keys()) | set(pred.keys()))
    gt_map = _dense_ids(gt)
    pr_map = _dense_ids(pred)
    n_gt_ids, n_pr_ids = len(gt_map), len(pr_map)
    alphas = np.asarray(alphas, dtype=float)
    n_alpha = alphas.size

    per_frame: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
    for f in frames:
        g_rows = list(gt.get(f, ()))
        p_rows = list(pred.get(f, ()))
        g_ids = np.array([gt_map[tid] for tid, _ in g_rows], dtype=int)
        p_ids = np.array([pr_map[tid] for tid, _ in p_rows], dtype=int)
        sim = np.zeros((len(g_rows), len(p_rows)))
        for i, (_, gb) in enumerate(g_rows):
            for j, (_, pb) in enumerate(p_rows):
                sim[i, j] = iou(gb, pb)
        per_frame.append((g_ids, p_ids, sim))

    hota = _evaluate_hota(per_frame, n_gt_ids, n_pr_ids, alphas)
    mota, idsw = _evaluate_clear(per_frame, n_gt_ids)
    idf1 = _evaluate_idf1(per_frame, n_gt_ids, n_pr_ids)

    return SequenceEval(
        hota=float(np.mean(hota["hota"])),
        deta=float(np.mean(hota["deta"])),
        assa=float(np.mean(hota["assa"])),
        detre=float(np.mean(hota["detre"])),
        loca=float(np.mean(hota["loca"])),
        mota=mota,
        idf1=idf1,
        idsw=idsw,
    )


def _evaluate_hota(per_frame, n_gt_ids: int, n_pr_ids: int, alphas: np.ndarray) -> dict:
    n_alpha = alphas.size
    tp = np.zeros(n_alpha)
    fn = np.zeros(n_alpha)
    fp = np.zeros(n_alpha)
    loc_sum = np.zeros(n_alpha)
    matches = [np.zeros((n_gt_ids, n_pr_ids)) for _ in range(n_alpha)]

    if n_gt_ids == 0 or n_pr_ids == 0:
        for g_ids, p_ids, _ in per_frame:
            fn += len(g_ids)
            fp += len(p_ids)
        deta = tp / np.maximum(1.0, tp + fn + fp)
        return {
            "hota": np.zeros(n_alpha),
            "deta": deta,
            "assa": np.zeros(n_alpha),
            "detre": tp / np.maximum(1.0, tp + fn),
            "loca": np.ones(n_alpha),
        }

    # Pass 1: global alignment between id pairs.
    potential = np.zeros((n_gt_ids, n_pr_ids))
    gt_count = np.zeros((n_gt_ids, 1))
    pr_count = np.zeros((1, n_pr_ids))
    for g_ids, p_ids, sim in per_frame:
        if len(g_ids) and len(p_ids):
            denom = sim.sum(0)[np.newaxis, :] + sim.sum(1)[:, np.newaxis] - sim
            sim_iou = np.zeros_like(sim)
            ok = denom > _EPS
            sim_iou[ok] = sim[ok] / denom[ok]
            potential[g_ids[:, np.newaxis], p_ids[np.newaxis, :]] += sim_iou
        gt_count[g_ids] += 1
        pr_count[0, p_ids] += 1
    alignment = potential / (gt_count + pr_count - potential)

    # Pass 2: per-frame matching, thresholded per alpha.
    for g_ids, p_ids, sim in per_frame:
        if len(g_ids) == 0:
            fp += len(p_ids)
            continue
        if len(p_ids) == 0:
            fn += len(g_ids)
            continue
        score = alignment[g_ids[:, np.newaxis], p_ids[np.newaxis, :]] * sim
        rows, cols = linear_sum_assignment(-score)
        matched_sim = sim[rows, cols]
        for a, alpha in enumerate(alphas):
            ok = matched_sim >= alpha - _EPS
            n_match = int(ok.sum())
            tp[a] += n_match
            fn[a] += len(g_ids) - n_match
            fp[a] += len(p_ids) - n_match
            if n_match:
                loc_sum[a] += matched_sim[ok].sum()
                matches[a][g_ids[rows[ok]], p_ids[cols[ok]]] += 1

    assa = np.zeros(n_alpha)
    for a in range(n_alpha):
        mc = matches[a]
        ass = mc / np.maximum(1.0, gt_count + pr_count - mc)
        assa[a] = (mc * ass).sum() / max(1.0, tp[a])
    deta = tp / np.maximum(1.0, tp + fn + fp)
    return {
        "hota": np.sqrt(deta * assa),
        "deta": deta,
        "assa": assa,
        "detre": tp / np.maximum(1.0, tp + fn),
        "loca": np.maximum(1e-10, loc_sum) / np.maximum(1e-10, tp),
    }


def _evaluate_clear(per_frame, n_gt_ids: int) -> tuple[float, int]:
    """MOTA and identity switches at the standard 0.5 IoU threshold.

    Matching prefers continuing the previous frame's correspondence: a pair
    that repeats the gt's last matched prediction id gets a large bonus
    before the optimal assignment, and only pairs above the threshold count.
    """
    tp = fn = fp = idsw = 0
    prev = -np.ones(n_gt_ids, dtype=int)
    for g_ids, p_ids, sim in per_frame:
        fn += len(g_ids)
        fp += len(p_ids)
        if len(g_ids) == 0 or len(p_ids) == 0:
            continue
        bonus = (p_ids[np.newaxis, :] == prev[g_ids][:, np.newaxis]).astype(float)
        score = 1000.0 * bonus + sim
        score[sim < CLEAR_THRESHOLD - _EPS] = 0.0
        rows, cols = linear_sum_assignment(-score)
        ok = score[rows, cols] > _EPS
        rows, cols = rows[ok], cols[ok]
        n_match = len(rows)
        tp += n_match
        fn -= n_match
        fp -= n_match
        matched_gt = g_ids[rows]
        matched_pr = p_ids[cols]
        switched = (prev[matched_gt] != -1) & (prev[matched_gt] != matched_pr)
        idsw += int(switched.sum())
        prev[matched_gt] = matched_pr
    n_gt_dets = tp + fn
    mota = 1.0 - (fn + fp + idsw) / max(1.0, n_gt_dets)
    return float(mota), int(idsw)


def _evaluate_idf1(per_frame, n_gt_ids: int, n_pr_ids: int) -> float:
    """Identity F1 from the optimal global id correspondence.

    The correspondence maximizes the number of frame-level id matches (pairs
    co-located above the 0.5 threshold), allowing ids to stay unmatched; the
    padded square assignment below is the exact formulation.
    """
    potential = np.zeros((n_gt_ids, n_pr_ids))
    gt_count = np.zeros(n_gt_ids)
    pr_count = np.zeros(n_pr_ids)
    for g_ids, p_ids, sim in per_frame:
        gt_count[g_ids] += 1
        pr_count[p_ids] += 1
        if len(g_ids) == 0 or len(p_ids) == 0:
            continue
        gi, pj = np.nonzero(sim >= CLEAR_THRESHOLD - _EPS)
        np.add.at(potential, (g_ids[gi], p_ids[pj]), 1)
    n_gt_dets = float(gt_count.sum())
    n_pr_dets = float(pr_count.sum())
    if n_gt_dets + n_pr_dets == 0:
        return 1.0
    size = n_gt_ids + n_pr_ids
    big = 1e9
    cost = np.full((size, size), big)
    cost[:n_gt_ids, :n_pr_ids] = (
        gt_count[:, np.newaxis] + pr_count[np.newaxis, :] - 2.0 * potential
    )
    for i in range(n_gt_ids):
        cost[i, n_pr_ids + i] = gt_count[i]
    for j in range(n_pr_ids):
        cost[n_gt_ids + j, j] = pr_count[j]
    cost[n_gt_ids:, n_pr_ids:] = 0.0
    rows, cols = linear_sum_assignment(cost)
    idtp = sum(
        potential[i, j] for i, j in zip(rows, cols) if i < n_gt_ids and j < n_pr_ids
    )
    return float(2.0 * idtp / (n_gt_dets + n_pr_dets))


def aggregate(per_sequence: Sequence[SequenceEval], weights: Sequence[float]) -> SequenceEval:
    """Dataset-level bundle from per-sequence bundles.

    Ratio metrics are combined as weighted means with the supplied
    per-sequence ground-truth detection counts, which pools the underlying
    counts before forming ratios instead of averaging the ratios naively;
    identity switches are summed.
    """
    if not per_sequence:
        raise ValueError("cannot aggregate an empty list of sequence results")
    if len(weights) != len(per_sequence):
        raise ValueError("need exactly one weight per sequence")
    w = np.asarray(weights, dtype=float)
    if w.sum() <= 0:
        w = np.ones_like(w)

    def pooled(name: str) -> float:
        values = np.array([getattr(s, name) for s in per_sequence])
        return float((values * w).sum() / w.sum())

    return SequenceEval(
        hota=pooled("hota"),
        deta=pooled("deta"),
        assa=pooled("assa"),
        detre=pooled("detre"),
        loca=pooled("loca"),
        mota=pooled("mota"),
        idf1=pooled("idf1"),
        idsw=int(sum(s.idsw for s in per_sequence)),
    )
