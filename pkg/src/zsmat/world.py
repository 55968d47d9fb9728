"""Deterministic synthetic world: ground truth, noisy detections, oracle segmenter.

Scenarios describe analytic objects (ellipses or rectangles on parametric
trajectories) with a static depth order.  From one ``ScenarioConfig`` the
module derives, bit-reproducibly for a given seed:

* per-frame ground-truth boxes, visible masks and visibility fractions,
* detector output with box jitter, misses, false positives and bimodal
  confidence scores, and
* an oracle segmenter session implementing the wire-protocol contract,
  whose mask quality erodes with the age of the last prompt and whose
  occluded tracks drift toward their occluder unless the engine drops the
  contaminated memory entries.

The contamination model is the minimal mechanism that makes memory drops
observable; it does not try to be faithful to any particular video
segmenter.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .association import iou
from .errors import ProtocolError
from .geometry import BBox, BitMask, Detection, OcclusionScore, mask_to_bbox
from .protocol import MaskEntry, SegmenterSession

log = logging.getLogger(__name__)

SHAPES = ("ellipse", "rectangle")


@dataclass(frozen=True)
class ObjectSpec:
    """One synthetic object.

    The center follows ``start + velocity * t + amplitude * sin(2*pi*t/period
    + phase)`` componentwise.  ``depth`` is the z-order: an object occludes
    every overlapping object with a strictly larger depth value.
    """

    shape: str
    size: tuple[float, float]
    start: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    amplitude: tuple[float, float] = (0.0, 0.0)
    period: float = 0.0
    phase: tuple[float, float] = (0.0, 0.0)
    enter_frame: int = 0
    exit_frame: int | None = None
    depth: int = 0

    def __post_init__(self) -> None:
        if self.shape not in SHAPES:
            raise ValueError(f"shape must be one of {SHAPES}, got {self.shape!r}")
        if self.size[0] <= 0 or self.size[1] <= 0:
            raise ValueError(f"object size must be positive, got {self.size}")

    def center(self, t: int) -> tuple[float, float]:
        cx = self.start[0] + self.velocity[0] * t
        cy = self.start[1] + self.velocity[1] * t
        if self.period > 0:
            w = 2.0 * math.pi * t / self.period
            cx += self.amplitude[0] * math.sin(w + self.phase[0])
            cy += self.amplitude[1] * math.sin(w + self.phase[1])
        return cx, cy


@dataclass(frozen=True)
class DetectorNoise:
    """Detected-box corruption and the bimodal score model.

    True detections draw scores from the high mode, false positives from the
    low mode; both are normals clipped to [0, 1].
    """

    tp_score_mode: tuple[float, float] = (0.85, 0.05)
    fp_score_mode: tuple[float, float] = (0.15, 0.05)
    fp_rate: float = 0.0
    fn_rate: float = 0.0
    box_jitter: float = 0.0

    def __post_init__(self) -> None:
        if self.tp_score_mode[0] <= self.fp_score_mode[0]:
            raise ValueError("the true-positive score mode must sit above the false-positive mode")
        if not (0.0 <= self.fn_rate <= 1.0):
            raise ValueError(f"fn_rate must lie in [0, 1], got {self.fn_rate}")
        if self.fp_rate < 0 or self.box_jitter < 0:
            raise ValueError("fp_rate and box_jitter must be non-negative")


@dataclass(frozen=True)
class OracleConfig:
    """Oracle segmenter behavior.

    The occlusion score is a linear map of the object's visibility fraction,
    calibrated so a fully visible object scores above the reliable band and
    an invisible one below the lost band, scaled down by mask decay.
    ``decay_per_frame`` erodes the mask by that area fraction per frame since
    the last prompt.  While a track's object is overlapped by a nearer
    object, contamination grows by ``contamination_rate * hidden_fraction``
    per frame unless the engine dropped the previous frame's memory entry;
    at full contamination the track latches onto the occluder.
    """

    occ_visible: float = 10.0
    occ_invisible: float = 0.0
    decay_per_frame: float = 0.002
    contamination_rate: float = 0.08

    def __post_init__(self) -> None:
        if self.occ_visible <= 8.0 or self.occ_invisible >= 2.0:
            raise ValueError("occlusion-score calibration must span the lifecycle bands")
        if self.decay_per_frame < 0 or self.contamination_rate < 0:
            raise ValueError("decay and contamination rates must be non-negative")

    def occ_of_visibility(self, v: float) -> float:
        return self.occ_invisible + (self.occ_visible - self.occ_invisible) * v


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int
    width: int
    height: int
    frames: int
    objects: tuple[ObjectSpec, ...]
    detector_noise: DetectorNoise = field(default_factory=DetectorNoise)
    oracle: OracleConfig = field(default_factory=OracleConfig)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1 or self.frames < 1:
            raise ValueError("width, height and frames must be positive")
        for i, obj in enumerate(self.objects):
            exit_frame = obj.exit_frame if obj.exit_frame is not None else self.frames
            if not (0 <= obj.enter_frame < exit_frame <= self.frames):
                raise ValueError(
                    f"object {i}: need 0 <= enter_frame < exit_frame <= frames, "
                    f"got enter={obj.enter_frame} exit={obj.exit_frame}"
                )


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    return {
        "seed": cfg.seed,
        "width": cfg.width,
        "height": cfg.height,
        "frames": cfg.frames,
        "objects": [
            {
                "shape": o.shape,
                "size": list(o.size),
                "start": list(o.start),
                "velocity": list(o.velocity),
                "amplitude": list(o.amplitude),
                "period": o.period,
                "phase": list(o.phase),
                "enter_frame": o.enter_frame,
                "exit_frame": o.exit_frame,
                "depth": o.depth,
            }
            for o in cfg.objects
        ],
        "detector_noise": {
            "tp_score_mode": list(cfg.detector_noise.tp_score_mode),
            "fp_score_mode": list(cfg.detector_noise.fp_score_mode),
            "fp_rate": cfg.detector_noise.fp_rate,
            "fn_rate": cfg.detector_noise.fn_rate,
            "box_jitter": cfg.detector_noise.box_jitter,
        },
        "oracle": {
            "occ_visible": cfg.oracle.occ_visible,
            "occ_invisible": cfg.oracle.occ_invisible,
            "decay_per_frame": cfg.oracle.decay_per_frame,
            "contamination_rate": cfg.oracle.contamination_rate,
        },
    }


def _pair(v, name: str) -> tuple[float, float]:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ValueError(f"{name} must be a pair of numbers")
    return (float(v[0]), float(v[1]))


def scenario_from_dict(obj: dict) -> ScenarioConfig:
    objects = []
    for raw in obj.get("objects", []):
        objects.append(
            ObjectSpec(
                shape=raw["shape"],
                size=_pair(raw["size"], "size"),
                start=_pair(raw["start"], "start"),
                velocity=_pair(raw.get("velocity", (0.0, 0.0)), "velocity"),
                amplitude=_pair(raw.get("amplitude", (0.0, 0.0)), "amplitude"),
                period=float(raw.get("period", 0.0)),
                phase=_pair(raw.get("phase", (0.0, 0.0)), "phase"),
                enter_frame=int(raw.get("enter_frame", 0)),
                exit_frame=None if raw.get("exit_frame") is None else int(raw["exit_frame"]),
                depth=int(raw.get("depth", 0)),
            )
        )
    noise_raw = obj.get("detector_noise", {})
    noise = DetectorNoise(
        tp_score_mode=_pair(noise_raw.get("tp_score_mode", (0.85, 0.05)), "tp_score_mode"),
        fp_score_mode=_pair(noise_raw.get("fp_score_mode", (0.15, 0.05)), "fp_score_mode"),
        fp_rate=float(noise_raw.get("fp_rate", 0.0)),
        fn_rate=float(noise_raw.get("fn_rate", 0.0)),
        box_jitter=float(noise_raw.get("box_jitter", 0.0)),
    )
    oracle_raw = obj.get("oracle", {})
    oracle = OracleConfig(
        occ_visible=float(oracle_raw.get("occ_visible", 10.0)),
        occ_invisible=float(oracle_raw.get("occ_invisible", 0.0)),
        decay_per_frame=float(oracle_raw.get("decay_per_frame", 0.002)),
        contamination_rate=float(oracle_raw.get("contamination_rate", 0.08)),
    )
    return ScenarioConfig(
        seed=int(obj["seed"]),
        width=int(obj["width"]),
        height=int(obj["height"]),
        frames=int(obj["frames"]),
        objects=tuple(objects),
        detector_noise=noise,
        oracle=oracle,
    )


# --------------------------------------------------------------------------
# World rasterization


@dataclass(frozen=True)
class GtRow:
    frame: int
    object_id: int
    bbox: BBox
    visibility: float


@dataclass(frozen=True)
class GroundTruth:
    width: int
    height: int
    frames: int
    rows: tuple[GtRow, ...]

    def table(self) -> dict[int, list[tuple[int, BBox]]]:
        out: dict[int, list[tuple[int, BBox]]] = {}
        for r in self.rows:
            out.setdefault(r.frame, []).append((r.object_id, r.bbox))
        return out


class _FrameState:
    __slots__ = ("full", "visible", "bbox", "visibility", "occluder")

    def __init__(self, full, visible, bbox, visibility, occluder):
        self.full = full
        self.visible = visible
        self.bbox = bbox
        self.visibility = visibility
        self.occluder = occluder


class _World:
    """Per-frame rasterized geometry shared by generate() and the oracle."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        xs = np.arange(cfg.width) + 0.5
        ys = np.arange(cfg.height) + 0.5
        gx, gy = np.meshgrid(xs, ys)
        # states[frame][object_id] -> _FrameState, only for present objects.
        self.states: list[dict[int, _FrameState]] = []
        for f in range(cfg.frames):
            frame_states: dict[int, _FrameState] = {}
            fulls: dict[int, np.ndarray] = {}
            for oid, obj in enumerate(cfg.objects):
                exit_frame = obj.exit_frame if obj.exit_frame is not None else cfg.frames
                if not (obj.enter_frame <= f < exit_frame):
                    continue
                cx, cy = obj.center(f)
                rx, ry = obj.size[0] / 2.0, obj.size[1] / 2.0
                if obj.shape == "ellipse":
                    full = ((gx - cx) / rx) ** 2 + ((gy - cy) / ry) ** 2 <= 1.0
                else:
                    full = (np.abs(gx - cx) <= rx) & (np.abs(gy - cy) <= ry)
                if full.any():
                    fulls[oid] = full
            for oid, full in fulls.items():
                depth = cfg.objects[oid].depth
                in_front = np.zeros_like(full)
                occluder = None
                best_overlap = 0
                for other, other_full in fulls.items():
                    if other == oid or cfg.objects[other].depth >= depth:
                        continue
                    in_front |= other_full
                    overlap = int(np.logical_and(full, other_full).sum())
                    if overlap > best_overlap:
                        best_overlap = overlap
                        occluder = other
                visible = full & ~in_front
                full_area = int(full.sum())
                mask = BitMask.from_array(full)
                frame_states[oid] = _FrameState(
                    full=full,
                    visible=visible,
                    bbox=mask_to_bbox(mask),
                    visibility=float(visible.sum()) / full_area,
                    occluder=occluder,
                )
            self.states.append(frame_states)

    def present(self, frame: int) -> list[int]:
        return sorted(self.states[frame].keys())

    def state(self, frame: int, oid: int) -> _FrameState | None:
        return self.states[frame].get(oid)


@lru_cache(maxsize=16)
def _build_world(cfg: ScenarioConfig) -> _World:
    return _World(cfg)


# --------------------------------------------------------------------------
# Generation


def generate_detailed(
    cfg: ScenarioConfig,
) -> tuple[GroundTruth, list[list[Detection]], list[list[bool]]]:
    """Like generate(), additionally flagging each detection as true/false.

    The flags exist for tests that need to label scores; they are not part
    of any file format.
    """
    if not cfg.objects and cfg.detector_noise.fp_rate == 0:
        raise ValueError("degenerate scenario: no objects and no false positives")
    world = _build_world(cfg)
    rng = np.random.default_rng(cfg.seed)
    noise = cfg.detector_noise

    rows: list[GtRow] = []
    detections: list[list[Detection]] = []
    truth_flags: list[list[bool]] = []
    for f in range(cfg.frames):
        frame_dets: list[Detection] = []
        frame_flags: list[bool] = []
        for oid in world.present(f):
            st = world.state(f, oid)
            rows.append(GtRow(frame=f, object_id=oid, bbox=st.bbox, visibility=st.visibility))
            if st.visibility <= 0.0:
                continue
            if noise.fn_rate > 0 and rng.random() < noise.fn_rate:
                continue
            box = st.bbox
            if noise.box_jitter > 0:
                dx = rng.normal(0.0, noise.box_jitter * box.w)
                dy = rng.normal(0.0, noise.box_jitter * box.h)
                sw = math.exp(rng.normal(0.0, noise.box_jitter))
                sh = math.exp(rng.normal(0.0, noise.box_jitter))
                box = BBox(box.x + dx, box.y + dy, box.w * sw, box.h * sh)
            score = float(np.clip(rng.normal(*noise.tp_score_mode), 0.0, 1.0))
            frame_dets.append(Detection(frame=f, bbox=box, score=score, label="object"))
            frame_flags.append(True)
        n_fp = int(rng.poisson(noise.fp_rate)) if noise.fp_rate > 0 else 0
        for _ in range(n_fp):
            w = rng.uniform(0.05, 0.25) * cfg.width
            h = rng.uniform(0.05, 0.25) * cfg.height
            x = rng.uniform(0.0, cfg.width - w)
            y = rng.uniform(0.0, cfg.height - h)
            score = float(np.clip(rng.normal(*noise.fp_score_mode), 0.0, 1.0))
            frame_dets.append(Detection(frame=f, bbox=BBox(x, y, w, h), score=score, label="object"))
            frame_flags.append(False)
        detections.append(frame_dets)
        truth_flags.append(frame_flags)

    gt = GroundTruth(width=cfg.width, height=cfg.height, frames=cfg.frames, rows=tuple(rows))
    return gt, detections, truth_flags


def generate(cfg: ScenarioConfig) -> tuple[GroundTruth, list[list[Detection]]]:
    """Ground truth plus noisy per-frame detections; bit-identical per seed."""
    gt, detections, _ = generate_detailed(cfg)
    return gt, detections


# --------------------------------------------------------------------------
# Oracle segmenter


def _inner_core(arr: np.ndarray, keep: float) -> np.ndarray:
    """Keep the innermost ``keep`` fraction of foreground pixels.

    Pixels are ranked by squared distance to the foreground centroid
    (ties by row, then column), so shaving the outermost pixels mimics
    erosion while staying fully deterministic.
    """
    if keep >= 1.0:
        return arr
    ys, xs = np.nonzero(arr)
    area = ys.size
    if area == 0:
        return arr
    removed = int(math.floor((1.0 - keep) * area + 1e-9))
    kept = max(0, area - removed)
    out = np.zeros_like(arr)
    if kept == 0:
        return out
    cy, cx = ys.mean(), xs.mean()
    d2 = (ys - cy) ** 2 + (xs - cx) ** 2
    order = np.lexsort((xs, ys, d2))[:kept]
    out[ys[order], xs[order]] = True
    return out


class _OracleTrack:
    __slots__ = ("bound", "last_prompt_frame", "anchor_frame", "contamination", "last_occluder")

    def __init__(self, bound: int | None, last_prompt_frame: int):
        self.bound = bound
        self.last_prompt_frame = last_prompt_frame  # last actual prompt (rollback key)
        self.anchor_frame = last_prompt_frame  # decay reference; also reset by a binding switch
        self.contamination = 0.0
        self.last_occluder: int | None = None


class OracleSegmenter(SegmenterSession):
    """Protocol-conformant session answering from the rasterized world.

    Prompts bind a track to the ground-truth object with maximal box
    overlap (no overlap leaves it bound to nothing).  Propagation returns
    the bound object's visible mask eroded by prompt age; while the object
    is overlapped from the front, the mask additionally absorbs the
    occluder's core at the current contamination level, and a track whose
    contamination reaches 1 latches onto the occluder outright.  Dropping
    the previous frame's memory entry stops that frame from contributing
    contamination.
    """

    def __init__(self, cfg: ScenarioConfig):
        self._cfg = cfg
        self._world = _build_world(cfg)
        self._open = False
        self._frames_propagated = 0
        self._tracks: dict[int, _OracleTrack] = {}
        self._dropped: set[tuple[int, int]] = set()

    # -- protocol surface ---------------------------------------------------

    def open(self, sequence_id: str, width: int, height: int, frames: int) -> None:
        if self._open:
            raise ProtocolError("sequence already open")
        if (width, height, frames) != (self._cfg.width, self._cfg.height, self._cfg.frames):
            raise ProtocolError(
                f"handshake mismatch: scenario is {self._cfg.width}x{self._cfg.height}"
                f"x{self._cfg.frames}, got {width}x{height}x{frames}"
            )
        self._open = True

    def prompt(self, frame: int, track_id: int, bbox: BBox) -> tuple[BitMask, OcclusionScore]:
        self._require_open()
        if frame != self._frames_propagated - 1:
            raise ProtocolError(
                f"prompt frame {frame} is not the current frame {self._frames_propagated - 1}"
            )
        best, best_iou = None, 0.0
        for oid in self._world.present(frame):
            st = self._world.state(frame, oid)
            overlap = iou(bbox, st.bbox)
            if overlap > best_iou:
                best, best_iou = oid, overlap
        track = _OracleTrack(bound=best, last_prompt_frame=frame)
        self._tracks[track_id] = track
        if best is None:
            return BitMask.empty(self._cfg.width, self._cfg.height), self._occ(0.0)
        st = self._world.state(frame, best)
        return BitMask.from_array(st.visible), self._occ(st.visibility)

    def propagate(self, frame: int) -> list[MaskEntry]:
        self._require_open()
        if frame != self._frames_propagated:
            raise ProtocolError(
                f"propagate frame {frame} is out of order, expected {self._frames_propagated}"
            )
        if frame >= self._cfg.frames:
            raise ProtocolError(f"frame {frame} is beyond the sequence end")
        self._frames_propagated += 1
        return [
            self._track_entry(tid, frame) for tid in sorted(self._tracks.keys())
        ]

    def drop_memory(self, track_id: int, frame: int) -> None:
        self._require_open()
        if frame > self._frames_propagated - 1:
            raise ProtocolError(f"cannot drop memory of future frame {frame}")
        track = self._tracks.get(track_id)
        if track is None:
            log.warning("drop_memory for unknown track %d ignored", track_id)
            return
        if frame == track.last_prompt_frame:
            # Dropping the prompt entry itself removes the whole track: its
            # memory consisted of nothing else.  This is the rollback path
            # for rejected initialization prompts.
            del self._tracks[track_id]
            return
        self._dropped.add((track_id, frame))

    def close(self) -> None:
        self._require_open()
        self._open = False

    # -- model --------------------------------------------------------------

    def _require_open(self) -> None:
        if not self._open:
            raise ProtocolError("no open sequence")

    def _occ(self, visibility: float, quality: float = 1.0) -> float:
        return self._cfg.oracle.occ_of_visibility(visibility) * quality

    def _track_entry(self, tid: int, frame: int) -> MaskEntry:
        track = self._tracks[tid]
        empty = BitMask.empty(self._cfg.width, self._cfg.height)
        oracle = self._cfg.oracle

        # Contamination bookkeeping from the previous frame's memory.
        prev = frame - 1
        if track.bound is not None and prev >= track.anchor_frame:
            prev_state = self._world.state(prev, track.bound)
            prev_occluder = prev_state.occluder if prev_state is not None else None
            if prev_occluder is not None:
                track.last_occluder = prev_occluder
                if (tid, prev) not in self._dropped:
                    hidden = 1.0 - prev_state.visibility
                    track.contamination = min(
                        1.0, track.contamination + oracle.contamination_rate * hidden
                    )
            else:
                track.contamination = max(
                    0.0, track.contamination - oracle.contamination_rate
                )
        if track.contamination >= 1.0 and track.last_occluder is not None:
            # Full contamination: the memory now describes the occluder, so
            # the track latches onto it with fresh quality.
            track.bound = track.last_occluder
            track.anchor_frame = frame
            track.contamination = 0.0
            track.last_occluder = None

        if track.bound is None:
            return MaskEntry(tid, empty, self._occ(0.0))
        st = self._world.state(frame, track.bound)
        if st is None:
            return MaskEntry(tid, empty, self._occ(0.0))

        age = frame - track.anchor_frame
        quality = max(0.0, 1.0 - oracle.decay_per_frame * age)
        mask = _inner_core(st.visible, quality)
        # The absorbed occluder core is only visible while the occlusion
        # lasts; once the occluder moves off, either the track recovered
        # (contamination < 1, handled above by decay) or it switched.
        if track.contamination > 0.0 and st.occluder is not None:
            ghost_state = self._world.state(frame, st.occluder)
            if ghost_state is not None:
                mask = mask | _inner_core(ghost_state.visible, track.contamination)
        return MaskEntry(tid, BitMask.from_array(mask), self._occ(st.visibility, quality))


def oracle_session(cfg: ScenarioConfig) -> OracleSegmenter:
    """A fresh protocol-conformant session over the scenario's world."""
    return OracleSegmenter(cfg)
