"""Per-frame track management.

Each frame runs a fixed pipeline against the segmenter session:

1. propagate every registered track and refresh masks, boxes and scores;
2. update occlusion histories, lost streaks and lifecycle states;
3. detect cross-object interactions and drop contaminated memory entries;
4. match the frame's detections to track boxes by optimal assignment;
5. gate matched pairs for mask reconstruction and re-prompt the winners;
6. probe unmatched detections as new tracks via mask-overlap screening;
7. finalize terminations;
8. suppress near-duplicate masks for this frame's output.

Track boxes are always re-derived from the current mask, never carried over
from a detection, because the reconstruction gate compares detection boxes
against the box of the track *mask*.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .association import hungarian_match, iou, iou_matrix, mask_iou
from .geometry import BBox, BitMask, Detection, OcclusionScore, mask_area, mask_intersection, mask_to_bbox
from .protocol import SegmenterSession

INIT_RULE_MASK_OVERLAP = "mask_overlap"
INIT_RULE_BOX_FILL = "box_fill"
RECONSTRUCTION_DENSITY = "density_aware"
RECONSTRUCTION_ALWAYS = "always"
RECONSTRUCTION_OFF = "off"


@dataclass(frozen=True)
class TrackerConfig:
    """Track-management thresholds.

    The defaults are one fixed setting meant to hold across datasets
    without per-sequence retuning.  ``match_floor`` is the minimum IoU for
    a valid detection-track match; without a floor, spurious far-away
    matches block new-track creation.

    The ``init_rule`` and ``reconstruction`` switches exist for ablation
    runs: ``box_fill`` initializes on the fraction of detection-box pixels
    not covered by any track mask (the older heuristic the mask-overlap
    rule replaces), and ``always`` re-prompts every matched pair in the
    uncertainty band regardless of crowding.
    """

    delta: float = 0.1
    tau_mask: float = 0.4
    tau_iou: float = 0.3
    tau_reliable: float = 8.0
    tau_pending: float = 6.0
    tau_lost: float = 2.0
    n_lost: int = 25
    n_frames: int = 10
    tau_miou: float = 0.8
    tau_dscore: float = 2.0
    tau_dstd: float = 0.2
    tau_nms: float = 0.95
    match_floor: float = 0.1
    init_rule: str = INIT_RULE_MASK_OVERLAP
    reconstruction: str = RECONSTRUCTION_DENSITY
    mask_nms_enabled: bool = True

    def __post_init__(self) -> None:
        if not (self.tau_reliable > self.tau_pending > self.tau_lost):
            raise ValueError(
                "lifecycle bands must satisfy tau_reliable > tau_pending > tau_lost, got "
                f"{self.tau_reliable} / {self.tau_pending} / {self.tau_lost}"
            )
        for name in ("tau_mask", "tau_iou", "tau_miou", "tau_nms", "match_floor", "delta"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.n_lost < 1 or self.n_frames < 1:
            raise ValueError("n_lost and n_frames must be positive")
        if self.init_rule not in (INIT_RULE_MASK_OVERLAP, INIT_RULE_BOX_FILL):
            raise ValueError(f"unknown init_rule {self.init_rule!r}")
        if self.reconstruction not in (RECONSTRUCTION_DENSITY, RECONSTRUCTION_ALWAYS, RECONSTRUCTION_OFF):
            raise ValueError(f"unknown reconstruction mode {self.reconstruction!r}")


class TrackState(enum.Enum):
    RELIABLE = "Reliable"
    PENDING = "Pending"
    LOST = "Lost"
    TERMINATED = "Terminated"


@dataclass
class Track:
    id: int
    state: TrackState
    mask: BitMask
    bbox: BBox | None
    occ: OcclusionScore
    occ_history: deque
    lost_streak: int
    born_frame: int
    last_prompt_frame: int

    @property
    def active(self) -> bool:
        return self.state is not TrackState.TERMINATED


@dataclass(frozen=True)
class TrackEvent:
    frame: int
    kind: str  # Created | Reprompted | MemoryDropped | Suppressed | Terminated
    track_id: int
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TrackOutput:
    track_id: int
    bbox: BBox
    mask: BitMask


@dataclass(frozen=True)
class FrameResult:
    frame: int
    outputs: tuple[TrackOutput, ...]
    events: tuple[TrackEvent, ...]


def update_lifecycle(track: Track, occ: OcclusionScore, cfg: TrackerConfig) -> TrackState:
    """Fold one occlusion score into the track's lifecycle.

    The score bands are: reliable at or above ``tau_reliable``, pending
    strictly inside (``tau_pending``, ``tau_reliable``), lost strictly below
    ``tau_lost``.  Scores between the lost and pending bounds keep the
    previous state.  A lost streak of ``n_lost`` consecutive sub-lost
    scores terminates the track.
    """
    track.occ_history.append(occ)
    track.occ = occ
    if occ < cfg.tau_lost:
        track.lost_streak += 1
    else:
        track.lost_streak = 0
    if track.lost_streak >= cfg.n_lost:
        track.state = TrackState.TERMINATED
    elif occ >= cfg.tau_reliable:
        track.state = TrackState.RELIABLE
    elif cfg.tau_pending < occ < cfg.tau_reliable:
        track.state = TrackState.PENDING
    elif occ < cfg.tau_lost:
        track.state = TrackState.LOST
    return track.state


class TrackManager:
    """Tracking state machine for one sequence; strictly single-threaded."""

    def __init__(self, session: SegmenterSession, cfg: TrackerConfig | None = None):
        self.session = session
        self.cfg = cfg or TrackerConfig()
        self.tracks: dict[int, Track] = {}
        self._next_id = 1

    # -- queries --------------------------------------------------------------

    def active_tracks(self) -> list[Track]:
        return [t for t in self.tracks.values() if t.active]

    # -- pipeline -------------------------------------------------------------

    def step(self, frame: int, detections: Sequence[Detection]) -> FrameResult:
        """Run one frame.  Detections must already be score-filtered."""
        cfg = self.cfg
        events: list[TrackEvent] = []

        # (1) + (2) propagate and refresh lifecycle state.
        entries = {e.track_id: e for e in self.session.propagate(frame)}
        for track in self.active_tracks():
            entry = entries.get(track.id)
            if entry is None:
                # The segmenter disowned the track; without fresh masks the
                # track cannot be continued.
                track.state = TrackState.TERMINATED
                track.bbox = None
                events.append(TrackEvent(frame, "Terminated", track.id, {"reason": "no_entry"}))
                continue
            track.mask = entry.mask
            track.bbox = mask_to_bbox(entry.mask)
            previously_active = track.active
            update_lifecycle(track, entry.occ, cfg)
            if previously_active and not track.active:
                events.append(
                    TrackEvent(frame, "Terminated", track.id, {"lost_streak": track.lost_streak})
                )

        # (3) cross-object interaction.
        events.extend(self.cross_object_interaction(frame))

        # (4) optimal detection-track matching on boxes.
        tracks = self.active_tracks()
        matrix = iou_matrix([d.bbox for d in detections], [t.bbox for t in tracks])
        assignment = hungarian_match(matrix, cfg.match_floor)

        # (5) reconstruction of matched, uncertain tracks.
        for det_idx, track_idx in assignment.pairs:
            events.extend(self.reconstruction_gate(frame, detections[det_idx], tracks[track_idx], det_idx))

        # (6) initialization from unmatched detections.
        for det_idx in assignment.unmatched_detections:
            events.extend(self.try_initialize(frame, detections[det_idx], det_idx))

        # (7) terminations triggered outside the lifecycle update would land
        # here; streak-based ones already fired in (2).

        # (8) per-frame mask suppression.
        suppressed: set[int] = set()
        if cfg.mask_nms_enabled:
            nms_events = self.mask_nms(frame)
            suppressed = {e.track_id for e in nms_events}
            events.extend(nms_events)

        outputs = tuple(
            TrackOutput(t.id, t.bbox, t.mask)
            for t in self.active_tracks()
            if t.bbox is not None and t.id not in suppressed
        )
        return FrameResult(frame=frame, outputs=outputs, events=tuple(events))

    # -- stages ---------------------------------------------------------------

    def try_initialize(self, frame: int, det: Detection, det_idx: int) -> list[TrackEvent]:
        """Decide whether an unmatched detection becomes a new track.

        The detection box is always prompted first; the resulting mask is
        compared against every active track mask by normalized intersection
        |M_det ∩ M_i| / |M_det| and the track is kept only when the maximum
        stays strictly below ``tau_mask`` (the maximum over no tracks is 0).
        Rejected prompts are rolled back with a memory drop so the segmenter
        does not accumulate ghost tracks.
        """
        cfg = self.cfg
        existing = [t for t in self.active_tracks() if mask_area(t.mask) > 0]

        if cfg.init_rule == INIT_RULE_BOX_FILL and existing:
            # Older heuristic: require >50% of the detection-box pixels to be
            # unassigned to any track mask.  Kept only for ablation runs.
            if self._assigned_fraction(det.bbox, existing) >= 0.5:
                return []

        track_id = self._next_id
        self._next_id += 1
        mask, occ = self.session.prompt(frame, track_id, det.bbox)
        if mask_area(mask) == 0:
            self.session.drop_memory(track_id, frame)
            return []

        nmi_max = 0.0
        if cfg.init_rule == INIT_RULE_MASK_OVERLAP:
            det_area = mask_area(mask)
            for t in existing:
                nmi = mask_intersection(mask, t.mask) / det_area
                nmi_max = max(nmi_max, nmi)
            if not (nmi_max < cfg.tau_mask):
                self.session.drop_memory(track_id, frame)
                return []

        track = Track(
            id=track_id,
            state=TrackState.PENDING,
            mask=mask,
            bbox=mask_to_bbox(mask),
            occ=occ,
            occ_history=deque([occ], maxlen=cfg.n_frames),
            lost_streak=0,
            born_frame=frame,
            last_prompt_frame=frame,
        )
        update_lifecycle_state_only(track, occ, self.cfg)
        self.tracks[track_id] = track
        return [
            TrackEvent(frame, "Created", track_id, {"det_index": det_idx, "nmi_max": nmi_max})
        ]

    def reconstruction_gate(
        self, frame: int, det: Detection, matched: Track, det_idx: int
    ) -> list[TrackEvent]:
        """Re-prompt a matched track when the detection is spatially unambiguous.

        The gap between the best and second-best IoU of the detection box
        against all track boxes must exceed ``tau_iou`` (the second-best is 0
        when only one track exists), the best track must be the matched one,
        and the matched track's occlusion score must lie strictly inside the
        uncertainty band (``tau_pending``, ``tau_reliable``).
        """
        cfg = self.cfg
        if cfg.reconstruction == RECONSTRUCTION_OFF:
            return []
        if not (cfg.tau_pending < matched.occ < cfg.tau_reliable):
            return []
        detail = {"det_index": det_idx, "occ": matched.occ}
        if cfg.reconstruction == RECONSTRUCTION_DENSITY:
            scored = [
                (iou(det.bbox, t.bbox), t.id)
                for t in self.active_tracks()
                if t.bbox is not None
            ]
            scored.sort(key=lambda s: (-s[0], s[1]))
            best_iou, best_id = scored[0]
            second = scored[1][0] if len(scored) > 1 else 0.0
            gap = best_iou - second
            if not (gap > cfg.tau_iou) or best_id != matched.id:
                return []
            detail["gap"] = gap
            detail["ious"] = [best_iou, second]

        mask, occ = self.session.prompt(frame, matched.id, det.bbox)
        matched.mask = mask
        matched.bbox = mask_to_bbox(mask)
        matched.last_prompt_frame = frame
        return [TrackEvent(frame, "Reprompted", matched.id, detail)]

    def cross_object_interaction(self, frame: int) -> list[TrackEvent]:
        """Drop the memory of tracks being absorbed by an overlapping track.

        Pairs whose masks overlap above ``tau_miou`` are in an occlusion
        relationship.  The occluded side is the lower mean occlusion score
        when the means differ by more than ``tau_dscore``, otherwise the
        higher score standard deviation when those differ by more than
        ``tau_dstd``; otherwise no action.  Each occluded track gets one
        memory drop for the current frame.
        """
        cfg = self.cfg
        tracks = [t for t in self.active_tracks() if mask_area(t.mask) > 0]
        occluded: dict[int, dict] = {}
        for i in range(len(tracks)):
            for j in range(i + 1, len(tracks)):
                a, b = tracks[i], tracks[j]
                overlap = mask_iou(a.mask, b.mask)
                if not (overlap > cfg.tau_miou):
                    continue
                mean_a, mean_b = _mean(a.occ_history), _mean(b.occ_history)
                if abs(mean_a - mean_b) > cfg.tau_dscore:
                    loser = a if mean_a < mean_b else b
                    rule = "mean_occ"
                else:
                    std_a, std_b = _std(a.occ_history), _std(b.occ_history)
                    if abs(std_a - std_b) > cfg.tau_dstd:
                        loser = a if std_a > std_b else b
                        rule = "std_occ"
                    else:
                        continue
                winner = b if loser is a else a
                occluded.setdefault(
                    loser.id, {"partner": winner.id, "rule": rule, "miou": overlap}
                )
        events = []
        for track_id in sorted(occluded.keys()):
            self.session.drop_memory(track_id, frame)
            events.append(TrackEvent(frame, "MemoryDropped", track_id, occluded[track_id]))
        return events

    def mask_nms(self, frame: int) -> list[TrackEvent]:
        """Suppress this frame's output of near-duplicate masks.

        Among pairs overlapping above ``tau_nms`` the lower current
        occlusion score loses; ties lose to the younger track, then to the
        larger id.  Suppression only omits the output row, the track state
        is untouched.
        """
        cfg = self.cfg
        tracks = [t for t in self.active_tracks() if mask_area(t.mask) > 0]
        tracks.sort(key=lambda t: (-t.occ, t.born_frame, t.id))
        kept: list[Track] = []
        events = []
        for t in tracks:
            blocker = next((k for k in kept if mask_iou(t.mask, k.mask) > cfg.tau_nms), None)
            if blocker is None:
                kept.append(t)
            else:
                events.append(
                    TrackEvent(frame, "Suppressed", t.id, {"kept": blocker.id, "occ": t.occ})
                )
        return events

    # -- helpers ---------------------------------------------------------------

    def _assigned_fraction(self, bbox: BBox, tracks: list[Track]) -> float:
        """Fraction of the box's pixels covered by any existing track mask."""
        if not tracks:
            return 0.0
        sample = tracks[0].mask
        width, height = sample.width, sample.height
        x0 = max(0, int(np.floor(bbox.x + 0.5)))
        y0 = max(0, int(np.floor(bbox.y + 0.5)))
        x1 = min(width, int(np.ceil(bbox.x + bbox.w - 0.5)) + 1)
        y1 = min(height, int(np.ceil(bbox.y + bbox.h - 0.5)) + 1)
        if x1 <= x0 or y1 <= y0:
            return 0.0
        covered = np.zeros((y1 - y0, x1 - x0), dtype=bool)
        for t in tracks:
            covered |= t.mask.to_array()[y0:y1, x0:x1]
        return float(covered.sum()) / covered.size


def update_lifecycle_state_only(track: Track, occ: OcclusionScore, cfg: TrackerConfig) -> None:
    """Set the state bands for a score that is already in the history."""
    if occ >= cfg.tau_reliable:
        track.state = TrackState.RELIABLE
    elif cfg.tau_pending < occ < cfg.tau_reliable:
        track.state = TrackState.PENDING
    elif occ < cfg.tau_lost:
        track.state = TrackState.LOST


def _mean(values) -> float:
    return float(sum(values) / len(values))


def _std(values) -> float:
    m = _mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / len(values))


def run_sequence(
    session: SegmenterSession,
    sequence_id: str,
    width: int,
    height: int,
    frames: int,
    detections_by_frame: dict[int, list[Detection]],
    cfg: TrackerConfig | None = None,
) -> list[FrameResult]:
    """Drive a full sequence through the pipeline, opening and closing the session."""
    manager = TrackManager(session, cfg)
    session.open(sequence_id, width, height, frames)
    results = []
    try:
        for frame in range(frames):
            results.append(manager.step(frame, detections_by_frame.get(frame, [])))
    finally:
        session.close()
    return results
