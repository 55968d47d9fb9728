"""Per-sequence detection-score thresholding.

Scores are split into a low and a high cluster by exact two-means in one
dimension, and the threshold is the cluster-size-weighted combination of the
two cluster means plus a static offset that biases the filter toward
precision.  The split is computed by scanning every contiguous split point
of the sorted scores, which is the exact optimum in 1-D, rather than by
Lloyd iterations, so the result is deterministic and has no initialization
sensitivity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateDistribution


@dataclass(frozen=True)
class ThresholdConfig:
    """Knobs for the adaptive threshold.

    delta:    static offset added on top of the weighted-centroid threshold.
    fallback: threshold used when the scores cannot be clustered.
    floor:    raw scores below this value are discarded before clustering;
              open-vocabulary detectors emit a mass of near-zero proposals
              that would otherwise swamp the low cluster.
    """

    delta: float = 0.1
    fallback: float = 0.4
    floor: float = 0.05

    def __post_init__(self) -> None:
        if not (0.0 <= self.delta <= 1.0):
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")
        if not (0.0 <= self.fallback <= 1.0):
            raise ValueError(f"fallback must lie in [0, 1], got {self.fallback}")
        if not (0.0 <= self.floor < 1.0):
            raise ValueError(f"floor must lie in [0, 1), got {self.floor}")


@dataclass(frozen=True)
class ClusterResult:
    """Two-cluster split: means and sizes, low cluster first."""

    mu1: float
    mu2: float
    n1: int
    n2: int


def two_means_1d(scores: Sequence[float]) -> ClusterResult:
    """Globally optimal 2-partition of the scores by within-cluster squared deviation.

    In one dimension the optimal clusters are contiguous in sorted order, so
    the exact optimum is found by scanning all n-1 split points.  Ties are
    resolved toward the smallest low cluster.  Cluster 1 is always the one
    with the lower mean.

    Raises DegenerateDistribution when fewer than two distinct values exist.
    """
    xs = np.sort(np.asarray(scores, dtype=float))
    n = xs.size
    if n < 2 or xs[0] == xs[-1]:
        raise DegenerateDistribution("need at least two distinct score values")

    csum = np.cumsum(xs)
    csq = np.cumsum(xs * xs)
    k = np.arange(1, n)  # low cluster sizes
    left_sum = csum[:-1]
    left_sq = csq[:-1]
    right_sum = csum[-1] - left_sum
    right_sq = csq[-1] - left_sq
    sse = (left_sq - left_sum**2 / k) + (right_sq - right_sum**2 / (n - k))
    best = int(np.argmin(sse))  # first minimum -> smallest low cluster on ties
    n1 = best + 1
    # Means by plain sequential summation over the sorted values, so the
    # result is bit-identical to a naive reimplementation of the definition.
    return ClusterResult(
        mu1=sum(xs[:n1].tolist()) / n1,
        mu2=sum(xs[n1:].tolist()) / (n - n1),
        n1=n1,
        n2=n - n1,
    )


def adaptive_threshold(scores: Sequence[float], cfg: ThresholdConfig | None = None) -> float:
    """Weighted-centroid threshold over the admitted scores, plus the offset.

    Scores below ``cfg.floor`` are excluded before clustering.  The result is
    clamped to [0, 1].  Empty or degenerate inputs return ``cfg.fallback``.
    """
    cfg = cfg or ThresholdConfig()
    admitted = [s for s in scores if s >= cfg.floor]
    if not admitted:
        return cfg.fallback
    try:
        c = two_means_1d(admitted)
    except DegenerateDistribution:
        return cfg.fallback
    tau = (c.n1 * c.mu1 + c.n2 * c.mu2) / (c.n1 + c.n2) + cfg.delta
    return float(min(1.0, max(0.0, tau)))


def otsu_threshold(scores: Sequence[float], bins: int) -> float:
    """Histogram-based threshold maximizing between-class variance.

    Scores are binned uniformly over [0, 1].  The between-class variance is
    evaluated at every bin boundary; when several boundaries tie (an empty
    gap between two modes yields a flat maximum), the plateau's midpoint is
    returned.  Used as the independent cross-check for the clustering-based
    threshold, which it approximates for balanced bimodal samples.
    """
    xs = np.asarray(scores, dtype=float)
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    if xs.size < 2 or np.min(xs) == np.max(xs):
        raise DegenerateDistribution("need at least two distinct score values")

    counts, _ = np.histogram(xs, bins=bins, range=(0.0, 1.0))
    if np.count_nonzero(counts) < 2:
        raise DegenerateDistribution("all scores fall into a single histogram bin")

    centers = (np.arange(bins) + 0.5) / bins
    weighted = counts * centers
    c0 = np.cumsum(counts)[:-1]          # pixels below boundary k = 1..bins-1
    c1 = counts.sum() - c0
    m0 = np.cumsum(weighted)[:-1]
    m1 = weighted.sum() - m0
    valid = (c0 > 0) & (c1 > 0)
    variance = np.zeros(bins - 1)
    variance[valid] = (
        c0[valid] * c1[valid] * (m0[valid] / c0[valid] - m1[valid] / c1[valid]) ** 2
    )
    top = variance.max()
    plateau = np.flatnonzero(variance >= top - 1e-12 * max(top, 1.0)) + 1
    return float(plateau.mean() / bins)


def assign_clusters(scores: Sequence[float], split: ClusterResult) -> list[int]:
    """Label each score 1 (low cluster) or 2 (high cluster) for a given split."""
    boundary = (split.mu1 + split.mu2) / 2.0
    return [1 if s <= boundary else 2 for s in scores]


def score_histogram(
    scores: Sequence[float],
    split: ClusterResult | None,
    bins: int = 50,
) -> list[dict]:
    """Per-bin rows (lo, hi, count, cluster) for plotting score distributions.

    ``cluster`` is 0 when no split is available (degenerate sample).
    """
    counts, edges = np.histogram(np.asarray(scores, dtype=float), bins=bins, range=(0.0, 1.0))
    boundary = (split.mu1 + split.mu2) / 2.0 if split is not None else None
    rows = []
    for i in range(bins):
        lo, hi = float(edges[i]), float(edges[i + 1])
        center = (lo + hi) / 2.0
        if boundary is None:
            cluster = 0
        else:
            cluster = 1 if center <= boundary else 2
        rows.append({"lo": lo, "hi": hi, "count": int(counts[i]), "cluster": cluster})
    return rows
