/**
 * Detection export: one JSON line per frame with raw, unthresholded scores.
 *
 * Score filtering deliberately stays out of this tool: the engine derives a
 * per-sequence threshold from the full score distribution, so exporting a
 * pre-filtered file would defeat it.
 */

import * as fs from "node:fs";
import * as path from "node:path";

const FRAME_EXTENSIONS = new Set([".jpg", ".jpeg", ".png", ".bmp", ".webp"]);

export interface ExportJob {
  framesDir: string;
  prompt: string;
  outPath: string;
  mock: boolean;
}

export interface Detection {
  bbox: [number, number, number, number];
  score: number;
  label: string;
}

export interface FrameRecord {
  frame: number;
  detections: Detection[];
}

export function listFrames(framesDir: string): string[] {
  return fs
    .readdirSync(framesDir)
    .filter((name) => FRAME_EXTENSIONS.has(path.extname(name).toLowerCase()))
    .sort();
}

/** Small deterministic PRNG (mulberry32) so mock exports are reproducible. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function hashString(text: string): number {
  let h = 2166136261;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 16777619);
  }
  return h >>> 0;
}

const MOCK_WIDTH = 640;
const MOCK_HEIGHT = 480;

/**
 * Mock detector: a few persistent drifting objects scored from a high mode
 * plus per-frame clutter from a low mode, mirroring the bimodal shape real
 * open-vocabulary detectors produce.
 */
export function mockFrameDetections(prompt: string, frame: number): Detection[] {
  const base = hashString(prompt);
  const layout = mulberry32(base);
  const objects = 3 + Math.floor(layout() * 3);
  const anchors = Array.from({ length: objects }, () => ({
    x: 40 + layout() * (MOCK_WIDTH - 160),
    y: 40 + layout() * (MOCK_HEIGHT - 160),
    w: 40 + layout() * 80,
    h: 40 + layout() * 80,
    vx: (layout() - 0.5) * 3,
    vy: (layout() - 0.5) * 3,
  }));
  const rng = mulberry32(base ^ (frame + 1));
  const detections: Detection[] = [];
  for (const a of anchors) {
    if (rng() < 0.05) continue; // occasional miss
    const x = Math.max(0, Math.min(MOCK_WIDTH - a.w, a.x + a.vx * frame + (rng() - 0.5) * 4));
    const y = Math.max(0, Math.min(MOCK_HEIGHT - a.h, a.y + a.vy * frame + (rng() - 0.5) * 4));
    const score = Math.min(1, Math.max(0, 0.82 + (rng() - 0.5) * 0.12));
    detections.push({ bbox: [x, y, a.w, a.h], score, label: prompt });
  }
  const clutter = Math.floor(rng() * 4);
  for (let i = 0; i < clutter; i++) {
    const w = 20 + rng() * 80;
    const h = 20 + rng() * 80;
    detections.push({
      bbox: [rng() * (MOCK_WIDTH - w), rng() * (MOCK_HEIGHT - h), w, h],
      score: Math.min(1, Math.max(0, 0.12 + (rng() - 0.5) * 0.1)),
      label: prompt,
    });
  }
  return detections;
}

export function exportDetections(job: ExportJob): number {
  if (!job.prompt) throw new Error("prompt must be non-empty");
  if (!job.mock) {
    throw new Error(
      "no live detector backend is bundled; run with --mock or wire a detector into exportDetections()",
    );
  }
  const frames = listFrames(job.framesDir);
  const lines: string[] = [];
  frames.forEach((_, index) => {
    const record: FrameRecord = { frame: index, detections: mockFrameDetections(job.prompt, index) };
    lines.push(JSON.stringify(record));
  });
  fs.writeFileSync(job.outPath, lines.length ? lines.join("\n") + "\n" : "");
  return frames.length;
}
