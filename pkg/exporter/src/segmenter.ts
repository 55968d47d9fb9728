/**
 * Segmenter backends.
 *
 * A backend answers box prompts with masks and occlusion scores and
 * propagates all registered tracks one frame at a time. The mock backend
 * needs no weights and exists so the protocol layer is testable in CI; a
 * real video-segmentation backend implements the same interface.
 *
 * Occlusion-score contract: forward the model's raw per-object visibility
 * logit for the current frame, unchanged. The engine never interprets the
 * scale beyond comparing against its configured thresholds, so rescaling
 * (e.g. to probabilities) silently breaks the lifecycle bands.
 */

import { emptyMask, ellipseMask } from "./mask.js";
import type { MaskEntry, WireMask } from "./protocol.js";

export interface SegmenterBackend {
  open(sequenceId: string, width: number, height: number, frames: number): void;
  /** Register or rebase a track from a box prompt at the current frame. */
  prompt(frame: number, trackId: number, bbox: [number, number, number, number]): MaskEntry;
  /** Advance to `frame` and emit one entry per registered track. */
  propagate(frame: number): MaskEntry[];
  /** Forget the memory entry (track, frame); idempotent. */
  dropMemory(trackId: number, frame: number): void;
  close(): void;
}

interface MockTrack {
  bbox: [number, number, number, number];
  promptFrame: number;
  mask: WireMask;
}

/**
 * Deterministic stand-in segmenter.
 *
 * Prompts produce the ellipse inscribed in the prompt box at a high
 * occlusion score; propagation keeps each track's mask static while its
 * score decays slowly with prompt age. Dropping the entry of a track's own
 * prompt frame removes the track entirely (rollback of a provisional
 * prompt); other drops are recorded and otherwise inert.
 */
export class MockSegmenter implements SegmenterBackend {
  private width = 0;
  private height = 0;
  private tracks = new Map<number, MockTrack>();
  private dropped = new Set<string>();

  open(_sequenceId: string, width: number, height: number, _frames: number): void {
    this.width = width;
    this.height = height;
    this.tracks.clear();
    this.dropped.clear();
  }

  prompt(frame: number, trackId: number, bbox: [number, number, number, number]): MaskEntry {
    const mask = ellipseMask(bbox, this.width, this.height);
    const hasForeground = mask.runs.length > 1;
    this.tracks.set(trackId, { bbox, promptFrame: frame, mask });
    return { track_id: trackId, mask, occ: hasForeground ? 9.5 : 0.0 };
  }

  propagate(frame: number): MaskEntry[] {
    const entries: MaskEntry[] = [];
    for (const [trackId, track] of [...this.tracks.entries()].sort((a, b) => a[0] - b[0])) {
      const age = frame - track.promptFrame;
      const occ = Math.max(0, 9.5 - 0.05 * age);
      entries.push({
        track_id: trackId,
        mask: occ > 0 ? track.mask : emptyMask(this.width, this.height),
        occ,
      });
    }
    return entries;
  }

  dropMemory(trackId: number, frame: number): void {
    const track = this.tracks.get(trackId);
    if (track === undefined) return; // unknown tracks are tolerated
    if (track.promptFrame === frame) {
      this.tracks.delete(trackId);
      return;
    }
    this.dropped.add(`${trackId}:${frame}`);
  }

  close(): void {
    this.tracks.clear();
  }
}

/**
 * Placeholder for the weights-backed backend. Loading a real video
 * segmentation model is deployment-specific (checkpoints, GPU), so the
 * integration point is this factory: construct your backend and pass it to
 * `serve`. Selecting the live backend here without one registered is an
 * error rather than a silent mock fallback.
 */
export function createBackend(mock: boolean): SegmenterBackend {
  if (mock) return new MockSegmenter();
  throw new Error(
    "no live segmenter backend is bundled; run with --mock or wire a SegmenterBackend implementation into createBackend()",
  );
}
