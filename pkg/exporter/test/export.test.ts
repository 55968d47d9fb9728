import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { exportDetections, listFrames, mockFrameDetections } from "../src/export.js";

let dir: string;

beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "exporter-"));
});

afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

function makeFrames(n: number) {
  const frames = path.join(dir, "frames");
  fs.mkdirSync(frames);
  for (let i = 0; i < n; i++) {
    fs.writeFileSync(path.join(frames, `frame_${String(i).padStart(4, "0")}.jpg`), "");
  }
  fs.writeFileSync(path.join(frames, "notes.txt"), "ignored");
  return frames;
}

describe("listFrames", () => {
  it("keeps only image files, sorted", () => {
    const frames = makeFrames(3);
    expect(listFrames(frames)).toEqual(["frame_0000.jpg", "frame_0001.jpg", "frame_0002.jpg"]);
  });
});

describe("exportDetections", () => {
  it("writes an empty file for a zero-frame input", () => {
    const frames = path.join(dir, "frames");
    fs.mkdirSync(frames);
    const out = path.join(dir, "out.jsonl");
    const n = exportDetections({ framesDir: frames, prompt: "bird", outPath: out, mock: true });
    expect(n).toBe(0);
    expect(fs.readFileSync(out, "utf-8")).toBe("");
  });

  it("writes one schema-valid record per frame", () => {
    const frames = makeFrames(5);
    const out = path.join(dir, "out.jsonl");
    exportDetections({ framesDir: frames, prompt: "bird", outPath: out, mock: true });
    const lines = fs.readFileSync(out, "utf-8").trim().split("\n");
    expect(lines).toHaveLength(5);
    lines.forEach((line, i) => {
      const record = JSON.parse(line);
      expect(record.frame).toBe(i);
      for (const det of record.detections) {
        expect(det.bbox).toHaveLength(4);
        expect(det.bbox[2]).toBeGreaterThan(0);
        expect(det.bbox[3]).toBeGreaterThan(0);
        expect(det.score).toBeGreaterThanOrEqual(0);
        expect(det.score).toBeLessThanOrEqual(1);
        expect(det.label).toBe("bird");
      }
    });
  });

  it("is deterministic for a given prompt", () => {
    const frames = makeFrames(4);
    const a = path.join(dir, "a.jsonl");
    const b = path.join(dir, "b.jsonl");
    exportDetections({ framesDir: frames, prompt: "ape", outPath: a, mock: true });
    exportDetections({ framesDir: frames, prompt: "ape", outPath: b, mock: true });
    expect(fs.readFileSync(a, "utf-8")).toBe(fs.readFileSync(b, "utf-8"));
  });

  it("produces a bimodal score distribution", () => {
    const scores: number[] = [];
    for (let f = 0; f < 60; f++) {
      for (const det of mockFrameDetections("zebra", f)) scores.push(det.score);
    }
    const low = scores.filter((s) => s < 0.5);
    const high = scores.filter((s) => s >= 0.5);
    expect(low.length).toBeGreaterThan(10);
    expect(high.length).toBeGreaterThan(10);
    const mean = (xs: number[]) => xs.reduce((a, b) => a + b, 0) / xs.length;
    expect(mean(high) - mean(low)).toBeGreaterThan(0.4);
  });

  it("refuses to run without a backend outside mock mode", () => {
    const frames = makeFrames(1);
    expect(() =>
      exportDetections({ framesDir: frames, prompt: "bird", outPath: path.join(dir, "o"), mock: false }),
    ).toThrow(/mock/);
  });

  it("rejects an empty prompt", () => {
    const frames = makeFrames(1);
    expect(() =>
      exportDetections({ framesDir: frames, prompt: "", outPath: path.join(dir, "o"), mock: true }),
    ).toThrow(/prompt/);
  });
});
