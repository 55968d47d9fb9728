"""Glue between file formats, thresholding, tracking and evaluation.

These helpers are what the command-line front end calls; tests drive them
directly so the observable pipeline behavior and the CLI behavior are the
same code path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import DegenerateDistribution
from .formats import MotRow, RunConfig
from .geometry import Detection
from .protocol import SegmenterSession
from .threshold import ClusterResult, score_histogram, two_means_1d, adaptive_threshold
from .tracker import FrameResult, run_sequence


@dataclass(frozen=True)
class ThresholdReport:
    tau: float
    mode: str  # "adaptive" or "fixed"
    n_scores: int
    histogram: list
    split: ClusterResult | None


def compute_threshold(by_frame: dict[int, list[Detection]], cfg: RunConfig) -> ThresholdReport:
    """Pool the sequence's scores and derive its detection threshold."""
    scores = [d.score for dets in by_frame.values() for d in dets]
    if cfg.detection_threshold == "adaptive":
        tau = adaptive_threshold(scores, cfg.threshold)
        mode = "adaptive"
    else:
        tau = float(cfg.detection_threshold)
        mode = "fixed"
    admitted = [s for s in scores if s >= cfg.threshold.floor]
    try:
        split = two_means_1d(admitted) if admitted else None
    except DegenerateDistribution:
        split = None
    return ThresholdReport(
        tau=tau,
        mode=mode,
        n_scores=len(scores),
        histogram=score_histogram(scores, split),
        split=split,
    )


def filter_detections(
    by_frame: dict[int, list[Detection]], tau: float
) -> dict[int, list[Detection]]:
    return {f: [d for d in dets if d.score >= tau] for f, dets in by_frame.items()}


def threshold_report_to_dict(report: ThresholdReport) -> dict:
    out = {
        "tau": report.tau,
        "mode": report.mode,
        "n_scores": report.n_scores,
        "histogram": report.histogram,
    }
    if report.split is not None:
        out["clusters"] = {
            "mu1": report.split.mu1,
            "mu2": report.split.mu2,
            "n1": report.split.n1,
            "n2": report.split.n2,
        }
    return out


def results_to_mot_rows(results: list[FrameResult]) -> list[MotRow]:
    rows = []
    for r in results:
        for out in r.outputs:
            rows.append(MotRow(frame=r.frame, track_id=out.track_id, bbox=out.bbox))
    return rows


def events_to_json_lines(results: list[FrameResult]) -> list[str]:
    lines = []
    for r in results:
        for e in r.events:
            record = {"frame": e.frame, "event": e.kind, "track_id": e.track_id}
            record.update(e.detail)
            lines.append(json.dumps(record, separators=(",", ":")))
    return lines


def track_sequence(
    by_frame: dict[int, list[Detection]],
    session: SegmenterSession,
    sequence_id: str,
    width: int,
    height: int,
    frames: int,
    cfg: RunConfig,
) -> tuple[list[FrameResult], ThresholdReport]:
    """Threshold, then run the whole tracking pipeline over the sequence."""
    report = compute_threshold(by_frame, cfg)
    filtered = filter_detections(by_frame, report.tau)
    results = run_sequence(session, sequence_id, width, height, frames, filtered, cfg.tracker)
    return results, report
