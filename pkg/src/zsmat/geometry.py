"""Geometry and mask primitives shared by every other module.

Boxes use continuous ``(x, y, w, h)`` coordinates; a pixel ``(i, j)`` counts
as covered by a box iff its center ``(i + 0.5, j + 0.5)`` lies inside it.
Masks are binary rasters stored as column-major run-length encodings that
always start with a background run, so an encoded mask round-trips
bit-exactly through the wire protocol and file exports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Occlusion scores are plain floats on a logit-like scale; higher means the
# segmenter is more confident the object is visible in the current frame.
OcclusionScore = float


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box; ``(x, y)`` is the top-left corner, sides positive."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box sides must be positive, got w={self.w} h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    def as_xywh(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class BitMask:
    """Binary raster as column-major RLE, first run counting background pixels.

    ``runs`` alternate background/foreground lengths over the raster
    flattened column by column and must sum to ``width * height``.  An
    all-background mask is ``(width * height,)``, an all-foreground mask
    ``(0, width * height)``.
    """

    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"mask dimensions must be positive, got {self.width}x{self.height}")
        if not self.runs:
            raise ValueError("runs may not be empty")
        if any(r < 0 for r in self.runs):
            raise ValueError("runs must be non-negative")
        total = sum(self.runs)
        if total != self.width * self.height:
            raise ValueError(
                f"runs sum to {total}, expected {self.width}x{self.height}={self.width * self.height}"
            )

    @staticmethod
    def from_array(arr: np.ndarray) -> "BitMask":
        """Encode a (height, width) array; any nonzero entry is foreground."""
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        height, width = arr.shape
        flat = np.asarray(arr, dtype=bool).ravel(order="F")
        changes = np.flatnonzero(np.diff(flat))
        bounds = np.concatenate(([0], changes + 1, [flat.size]))
        runs = np.diff(bounds).tolist()
        if flat[0]:
            runs.insert(0, 0)
        return BitMask(width=width, height=height, runs=tuple(int(r) for r in runs))

    def to_array(self) -> np.ndarray:
        """Decode back to a (height, width) boolean array."""
        values = np.arange(len(self.runs)) % 2 == 1
        flat = np.repeat(values, self.runs)
        return flat.reshape((self.height, self.width), order="F")

    @staticmethod
    def empty(width: int, height: int) -> "BitMask":
        return BitMask(width=width, height=height, runs=(width * height,))


@dataclass(frozen=True)
class Detection:
    """A detector output: frame index, box, confidence in [0, 1], class label."""

    frame: int
    bbox: BBox
    score: float
    label: str

    def __post_init__(self) -> None:
        if self.frame < 0:
            raise ValueError(f"frame index must be >= 0, got {self.frame}")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


def mask_area(m: BitMask) -> int:
    """Count of foreground pixels."""
    return int(sum(m.runs[1::2]))


def mask_intersection(a: BitMask, b: BitMask) -> int:
    """|A ∩ B| for two masks of identical dimensions."""
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(
            f"mask dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    return int(np.logical_and(a.to_array(), b.to_array()).sum())


def mask_to_bbox(m: BitMask) -> BBox | None:
    """Tight bounding box of the foreground, or None for an empty mask.

    Never returns a zero-area box: a single foreground pixel at (x, y)
    yields ``BBox(x, y, 1, 1)``.
    """
    arr = m.to_array()
    rows = np.flatnonzero(arr.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(arr.any(axis=0))
    x0, x1 = int(cols[0]), int(cols[-1])
    y0, y1 = int(rows[0]), int(rows[-1])
    return BBox(x=float(x0), y=float(y0), w=float(x1 - x0 + 1), h=float(y1 - y0 + 1))
