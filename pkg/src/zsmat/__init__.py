"""Segmenter-agnostic zero-shot multi-object tracking engine.

The package couples any box detector with any promptable video segmenter
through a small wire protocol, manages track lifecycles with adaptive
detection thresholds, mask-based initialization, density-aware mask
reconstruction, cross-object memory drops and mask suppression, and ships a
deterministic synthetic world plus a HOTA-family evaluation harness so the
whole pipeline is testable without model weights.
"""

from .geometry import BBox, BitMask, Detection, OcclusionScore
from .threshold import ClusterResult, ThresholdConfig, adaptive_threshold, otsu_threshold, two_means_1d
from .association import Assignment, hungarian_match, iou, mask_iou
from .tracker import FrameResult, Track, TrackerConfig, TrackManager, TrackState
from .metrics import SequenceEval, aggregate, evaluate
from .world import ScenarioConfig, generate, oracle_session

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "BitMask",
    "Detection",
    "OcclusionScore",
    "ClusterResult",
    "ThresholdConfig",
    "adaptive_threshold",
    "otsu_threshold",
    "two_means_1d",
    "Assignment",
    "hungarian_match",
    "iou",
    "mask_iou",
    "FrameResult",
    "Track",
    "TrackerConfig",
    "TrackManager",
    "TrackState",
    "SequenceEval",
    "aggregate",
    "evaluate",
    "ScenarioConfig",
    "generate",
    "oracle_session",
    "__version__",
]
