"""File formats: detections JSONL, MOTChallenge-style CSV, flat run config.

Every reader validates strictly and reports the offending line; nothing is
silently coerced.  Writers emit canonical text so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, ValidationError
from .geometry import BBox, Detection
from .threshold import ThresholdConfig
from .tracker import TrackerConfig

MOT_COLUMNS = "frame,id,x,y,w,h,conf,class,visibility"


# --------------------------------------------------------------------------
# Detections JSONL: one record per frame, raw (unthresholded) scores.


def load_detections(path: str | Path) -> dict[int, list[Detection]]:
    """Read a detections file into frame -> detections, validating the schema.

    Frame numbers must be strictly increasing; frames without detections may
    simply be absent.
    """
    out: dict[int, list[Detection]] = {}
    last_frame = -1
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValidationError(f"{path}: line {lineno}: invalid JSON: {e}") from e
            try:
                frame, dets = _parse_record(record)
            except (ValidationError, ValueError) as e:
                raise ValidationError(f"{path}: line {lineno}: {e}") from e
            if frame <= last_frame:
                raise ValidationError(
                    f"{path}: line {lineno}: frames must be strictly increasing "
                    f"(frame {frame} after {last_frame})"
                )
            last_frame = frame
            out[frame] = dets
    return out


def _parse_record(record) -> tuple[int, list[Detection]]:
    if not isinstance(record, dict):
        raise ValidationError("record must be a JSON object")
    frame = record.get("frame")
    if not isinstance(frame, int) or isinstance(frame, bool) or frame < 0:
        raise ValidationError(f"frame must be a non-negative integer, got {frame!r}")
    raw = record.get("detections")
    if not isinstance(raw, list):
        raise ValidationError("detections must be a list")
    dets = []
    for i, d in enumerate(raw):
        if not isinstance(d, dict):
            raise ValidationError(f"detection {i} must be a JSON object")
        bbox = d.get("bbox")
        if not (
            isinstance(bbox, list)
            and len(bbox) == 4
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox)
        ):
            raise ValidationError(f"detection {i}: bbox must be a list of four numbers")
        score = d.get("score")
        if not isinstance(score, (int, float)) or isinstance(score, bool):
            raise ValidationError(f"detection {i}: score must be a number")
        label = d.get("label")
        if not isinstance(label, str):
            raise ValidationError(f"detection {i}: label must be a string")
        try:
            dets.append(
                Detection(frame=frame, bbox=BBox(*[float(v) for v in bbox]), score=float(score), label=label)
            )
        except ValueError as e:
            raise ValidationError(f"detection {i}: {e}") from e
    return frame, dets


def save_detections(path: str | Path, by_frame: dict[int, list[Detection]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for frame in sorted(by_frame.keys()):
            record = {
                "frame": frame,
                "detections": [
                    {"bbox": list(d.bbox.as_xywh()), "score": d.score, "label": d.label}
                    for d in by_frame[frame]
                ],
            }
            fh.write(json.dumps(record, separators=(",", ":")) + "\n")


# --------------------------------------------------------------------------
# MOTChallenge-style CSV (frame,id,x,y,w,h,conf,class,visibility; 1-based frames)


@dataclass(frozen=True)
class MotRow:
    frame: int  # 0-based in memory; written 1-based
    track_id: int
    bbox: BBox
    conf: float = 1.0
    cls: int = 1
    visibility: float = -1.0


def save_mot(path: str | Path, rows: list[MotRow]) -> None:
    ordered = sorted(rows, key=lambda r: (r.frame, r.track_id))
    with open(path, "w", encoding="utf-8") as fh:
        for r in ordered:
            x, y, w, h = r.bbox.as_xywh()
            fh.write(
                f"{r.frame + 1},{r.track_id},{_num(x)},{_num(y)},{_num(w)},{_num(h)},"
                f"{_num(r.conf)},{r.cls},{_num(r.visibility)}\n"
            )


def _num(v: float) -> str:
    return format(float(v), ".17g")


def load_mot(path: str | Path) -> list[MotRow]:
    rows: list[MotRow] = []
    seen: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 9:
                raise ValidationError(
                    f"{path}: line {lineno}: expected 9 columns ({MOT_COLUMNS}), got {len(parts)}"
                )
            try:
                frame = int(parts[0]) - 1
                track_id = int(parts[1])
                x, y, w, h, conf = (float(p) for p in parts[2:7])
                cls = int(parts[7])
                visibility = float(parts[8])
            except ValueError as e:
                raise ValidationError(f"{path}: line {lineno}: {e}") from e
            if frame < 0:
                raise ValidationError(f"{path}: line {lineno}: frame must be >= 1")
            key = (frame, track_id)
            if key in seen:
                raise ValidationError(
                    f"{path}: line {lineno}: duplicate (frame, id) pair {frame + 1},{track_id}"
                )
            seen.add(key)
            try:
                bbox = BBox(x, y, w, h)
            except ValueError as e:
                raise ValidationError(f"{path}: line {lineno}: {e}") from e
            rows.append(MotRow(frame, track_id, bbox, conf, cls, visibility))
    return rows


def mot_table(rows: list[MotRow]) -> dict[int, list[tuple[int, BBox]]]:
    out: dict[int, list[tuple[int, BBox]]] = {}
    for r in rows:
        out.setdefault(r.frame, []).append((r.track_id, r.bbox))
    return out


# --------------------------------------------------------------------------
# Run configuration: flat key-value text mirroring the hyperparameter names.


@dataclass(frozen=True)
class RunConfig:
    tracker: TrackerConfig
    threshold: ThresholdConfig
    detection_threshold: str | float = "adaptive"  # "adaptive" or a fixed value
    segmenter: str = "oracle"
    sequences: tuple[str, ...] = ()


_TRACKER_FLOAT_KEYS = (
    "delta",
    "tau_mask",
    "tau_iou",
    "tau_reliable",
    "tau_pending",
    "tau_lost",
    "tau_miou",
    "tau_dscore",
    "tau_dstd",
    "tau_nms",
    "match_floor",
)
_TRACKER_INT_KEYS = ("n_lost", "n_frames")
_THRESHOLD_FLOAT_KEYS = ("fallback", "floor")


def load_config(path: str | Path | None) -> RunConfig:
    """Defaults overlaid with the file's key=value pairs; unknown keys rejected."""
    values: dict[str, str] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
                key, value = (part.strip() for part in line.split("=", 1))
                if key in values:
                    raise ConfigError(f"{path}: line {lineno}: duplicate key '{key}'")
                values[key] = value
    return config_from_values(values, source=str(path) if path else "<defaults>")


def config_from_values(values: dict[str, str], source: str = "<values>") -> RunConfig:
    tracker_kwargs: dict = {}
    threshold_kwargs: dict = {}
    detection_threshold: str | float = "adaptive"
    segmenter = "oracle"
    sequences: tuple[str, ...] = ()

    def as_float(key: str, raw: str) -> float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{source}: key '{key}' must be a number, got {raw!r}") from None

    for key, raw in values.items():
        if key in _TRACKER_FLOAT_KEYS:
            tracker_kwargs[key] = as_float(key, raw)
        elif key in _TRACKER_INT_KEYS:
            try:
                tracker_kwargs[key] = int(raw)
            except ValueError:
                raise ConfigError(f"{source}: key '{key}' must be an integer, got {raw!r}") from None
        elif key == "init_rule":
            tracker_kwargs["init_rule"] = raw
        elif key == "reconstruction":
            tracker_kwargs["reconstruction"] = raw
        elif key == "mask_nms":
            if raw not in ("on", "off"):
                raise ConfigError(f"{source}: key 'mask_nms' must be 'on' or 'off', got {raw!r}")
            tracker_kwargs["mask_nms_enabled"] = raw == "on"
        elif key in _THRESHOLD_FLOAT_KEYS:
            threshold_kwargs[key] = as_float(key, raw)
        elif key == "detection_threshold":
            detection_threshold = "adaptive" if raw == "adaptive" else as_float(key, raw)
        elif key == "segmenter":
            segmenter = raw
        elif key == "sequences":
            sequences = tuple(s.strip() for s in raw.split(",") if s.strip())
        else:
            raise ConfigError(f"{source}: unknown key '{key}'")

    if "delta" in tracker_kwargs:
        threshold_kwargs["delta"] = tracker_kwargs["delta"]
    try:
        tracker = TrackerConfig(**tracker_kwargs)
        threshold = ThresholdConfig(**threshold_kwargs)
    except ValueError as e:
        raise ConfigError(f"{source}: {e}") from e
    return RunConfig(
        tracker=tracker,
        threshold=threshold,
        detection_threshold=detection_threshold,
        segmenter=segmenter,
        sequences=sequences,
    )


def config_to_text(cfg: RunConfig) -> str:
    """Render a config back to the flat key=value form (for run echoes)."""
    t = cfg.tracker
    lines = [f"{key} = {getattr(t, key)}" for key in _TRACKER_FLOAT_KEYS]
    lines += [f"{key} = {getattr(t, key)}" for key in _TRACKER_INT_KEYS]
    lines += [
        f"init_rule = {t.init_rule}",
        f"reconstruction = {t.reconstruction}",
        f"mask_nms = {'on' if t.mask_nms_enabled else 'off'}",
        f"fallback = {cfg.threshold.fallback}",
        f"floor = {cfg.threshold.floor}",
        f"detection_threshold = {cfg.detection_threshold}",
        f"segmenter = {cfg.segmenter}",
    ]
    if cfg.sequences:
        lines.append("sequences = " + ",".join(cfg.sequences))
    return "\n".join(lines) + "\n"
