"""Independent brute-force oracles for the test suite.

Everything here recomputes results by direct enumeration or naive counting,
deliberately avoiding the library's own algorithms (prefix sums, the
assignment solver, the vectorized metric bookkeeping) so that agreement is
meaningful.  Only elementary primitives (box IoU arithmetic) are repeated
inline.
"""

from __future__ import annotations

import itertools
import math


# --------------------------------------------------------------------------
# 1-D two-means by exhaustive contiguous-split search


def brute_two_means(scores):
    """Return (mu1, mu2, n1, n2) minimizing within-cluster squared deviation.

    Scans every contiguous split of the sorted scores, computing means and
    deviations with plain Python arithmetic.  First (smallest low cluster)
    split wins ties.
    """
    xs = sorted(float(s) for s in scores)
    n = len(xs)
    assert n >= 2 and xs[0] != xs[-1]
    best = None
    for k in range(1, n):
        left, right = xs[:k], xs[k:]
        mu1 = sum(left) / k
        mu2 = sum(right) / (n - k)
        sse = sum((v - mu1) ** 2 for v in left) + sum((v - mu2) ** 2 for v in right)
        if best is None or sse < best[0]:
            best = (sse, mu1, mu2, k)
    _, mu1, mu2, k = best
    return mu1, mu2, k, n - k


# --------------------------------------------------------------------------
# Assignment by enumeration


def enumerate_assignments(n_rows: int, n_cols: int):
    """Yield every partial injective row->col mapping as a tuple of pairs."""
    cols = range(n_cols)
    for k in range(0, min(n_rows, n_cols) + 1):
        for rows_subset in itertools.combinations(range(n_rows), k):
            for cols_perm in itertools.permutations(cols, k):
                yield tuple(zip(rows_subset, cols_perm))


def brute_best_assignment_total(matrix, floor: float) -> float:
    """Maximum total value over assignments whose pairs all reach the floor."""
    n_rows = len(matrix)
    n_cols = len(matrix[0]) if n_rows else 0
    best = 0.0
    for pairs in enumerate_assignments(n_rows, n_cols):
        if any(matrix[r][c] < floor for r, c in pairs):
            continue
        total = sum(matrix[r][c] for r, c in pairs)
        if total > best:
            best = total
    return best


# --------------------------------------------------------------------------
# Tracking metrics by direct definition


def box_iou(a, b) -> float:
    ax, ay, aw, ah = a
    bx, by, bw, bh = b
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


_EPS = 2.220446049250313e-16


def _frames_of(gt, pred):
    return sorted(set(gt.keys()) | set(pred.keys()))


def _rows(table, frame):
    return [(tid, (b.x, b.y, b.w, b.h)) for tid, b in table.get(frame, [])]


def brute_hota(gt, pred, alphas):
    """HOTA family by literal set counting.

    Per-frame matching enumerates every assignment and keeps the one with
    the highest alignment-weighted similarity.  Association scores are then
    counted per true positive by scanning the whole TP list.
    Returns means over the alpha grid for hota/deta/assa/detre/loca.
    """
    frames = _frames_of(gt, pred)
    gt_ids = sorted({tid for f in frames for tid, _ in gt.get(f, [])})
    pr_ids = sorted({tid for f in frames for tid, _ in pred.get(f, [])})
    gt_count = {g: sum(1 for f in frames for tid, _ in gt.get(f, []) if tid == g) for g in gt_ids}
    pr_count = {p: sum(1 for f in frames for tid, _ in pred.get(f, []) if tid == p) for p in pr_ids}

    # Global alignment from frame-normalized similarities.
    potential = {(g, p): 0.0 for g in gt_ids for p in pr_ids}
    for f in frames:
        g_rows, p_rows = _rows(gt, f), _rows(pred, f)
        if not g_rows or not p_rows:
            continue
        sims = [[box_iou(gb, pb) for _, pb in p_rows] for _, gb in g_rows]
        for i, (g, _) in enumerate(g_rows):
            for j, (p, _) in enumerate(p_rows):
                s = sims[i][j]
                denom = sum(sims[i]) + sum(row[j] for row in sims) - s
                if denom > _EPS:
                    potential[(g, p)] += s / denom
    alignment = {
        (g, p): potential[(g, p)] / (gt_count[g] + pr_count[p] - potential[(g, p)])
        for g in gt_ids
        for p in pr_ids
    }

    # Per-frame matching maximizing alignment-weighted similarity.
    matched = []  # (frame, gt_id, pred_id, sim)
    per_frame_sizes = []
    for f in frames:
        g_rows, p_rows = _rows(gt, f), _rows(pred, f)
        per_frame_sizes.append((len(g_rows), len(p_rows)))
        if not g_rows or not p_rows:
            continue
        sims = [[box_iou(gb, pb) for _, pb in p_rows] for _, gb in g_rows]
        best_pairs, best_total = (), -1.0
        for pairs in enumerate_assignments(len(g_rows), len(p_rows)):
            if len(pairs) < min(len(g_rows), len(p_rows)):
                continue  # the solver always returns a maximal matching
            total = sum(alignment[(g_rows[r][0], p_rows[c][0])] * sims[r][c] for r, c in pairs)
            if total > best_total:
                best_total, best_pairs = total, pairs
        for r, c in best_pairs:
            matched.append((f, g_rows[r][0], p_rows[c][0], sims[r][c]))

    total_gt = sum(n for n, _ in per_frame_sizes)
    total_pr = sum(n for _, n in per_frame_sizes)
    out = {"hota": [], "deta": [], "assa": [], "detre": [], "loca": []}
    for alpha in alphas:
        tps = [(f, g, p, s) for f, g, p, s in matched if s >= alpha - _EPS]
        tp = len(tps)
        fn = total_gt - tp
        fp = total_pr - tp
        deta = tp / max(1, tp + fn + fp)
        detre = tp / max(1, tp + fn)
        if tp:
            ass_sum = 0.0
            for _, g, p, _ in tps:
                tpa = sum(1 for _, g2, p2, _ in tps if g2 == g and p2 == p)
                fna = gt_count[g] - tpa
                fpa = pr_count[p] - tpa
                ass_sum += tpa / (tpa + fna + fpa)
            assa = ass_sum / tp
            loca = sum(s for _, _, _, s in tps) / tp
        else:
            assa = 0.0
            loca = 1.0
        out["deta"].append(deta)
        out["assa"].append(assa)
        out["detre"].append(detre)
        out["loca"].append(loca)
        out["hota"].append(math.sqrt(deta * assa))
    return {k: sum(v) / len(v) for k, v in out.items()}


def brute_clear(gt, pred, threshold=0.5):
    """MOTA and identity switches by per-frame enumeration.

    Matching maximizes 1000 * (continues previous correspondence) + IoU over
    all assignments, zeroing pairs below the threshold, exactly mirroring
    the standard evaluator's objective but solved by enumeration.
    """
    frames = _frames_of(gt, pred)
    prev: dict[int, int] = {}
    tp = fn = fp = idsw = 0
    for f in frames:
        g_rows, p_rows = _rows(gt, f), _rows(pred, f)
        fn += len(g_rows)
        fp += len(p_rows)
        if not g_rows or not p_rows:
            continue
        scores = []
        for g, gb in g_rows:
            row = []
            for p, pb in p_rows:
                s = box_iou(gb, pb)
                if s < threshold - _EPS:
                    row.append(0.0)
                else:
                    row.append(1000.0 * (prev.get(g) == p) + s)
            scores.append(row)
        best_pairs, best_total = (), -1.0
        for pairs in enumerate_assignments(len(g_rows), len(p_rows)):
            if len(pairs) < min(len(g_rows), len(p_rows)):
                continue
            total = sum(scores[r][c] for r, c in pairs)
            if total > best_total:
                best_total, best_pairs = total, pairs
        for r, c in best_pairs:
            if scores[r][c] <= _EPS:
                continue
            g, p = g_rows[r][0], p_rows[c][0]
            tp += 1
            fn -= 1
            fp -= 1
            if g in prev and prev[g] != p:
                idsw += 1
            prev[g] = p
    n_gt = tp + fn
    mota = 1.0 - (fn + fp + idsw) / max(1, n_gt)
    return mota, idsw


def brute_idf1(gt, pred, threshold=0.5):
    """IDF1 by enumerating every partial id correspondence."""
    frames = _frames_of(gt, pred)
    gt_ids = sorted({tid for f in frames for tid, _ in gt.get(f, [])})
    pr_ids = sorted({tid for f in frames for tid, _ in pred.get(f, [])})
    overlap = {(g, p): 0 for g in gt_ids for p in pr_ids}
    n_gt = n_pr = 0
    for f in frames:
        g_rows, p_rows = _rows(gt, f), _rows(pred, f)
        n_gt += len(g_rows)
        n_pr += len(p_rows)
        for g, gb in g_rows:
            for p, pb in p_rows:
                if box_iou(gb, pb) >= threshold - _EPS:
                    overlap[(g, p)] += 1
    if n_gt + n_pr == 0:
        return 1.0
    best_idtp = 0
    for pairs in enumerate_assignments(len(gt_ids), len(pr_ids)):
        idtp = sum(overlap[(gt_ids[r], pr_ids[c])] for r, c in pairs)
        best_idtp = max(best_idtp, idtp)
    return 2.0 * best_idtp / (n_gt + n_pr)
