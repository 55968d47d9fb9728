/** Binary raster helpers for building wire masks. */

import type { WireMask } from "./protocol.js";

/** Encode a raster (row-major Uint8Array of 0/1) into column-major RLE. */
export function encodeMask(raster: Uint8Array, width: number, height: number): WireMask {
  const runs: number[] = [];
  let current = 0;
  let length = 0;
  for (let x = 0; x < width; x++) {
    for (let y = 0; y < height; y++) {
      const value = raster[y * width + x] ? 1 : 0;
      if (value === current) {
        length++;
      } else {
        runs.push(length);
        current = value;
        length = 1;
      }
    }
  }
  runs.push(length);
  return { width, height, runs };
}

export function emptyMask(width: number, height: number): WireMask {
  return { width, height, runs: [width * height] };
}

/** Rasterize the ellipse inscribed in a box, clamped to the frame. */
export function ellipseMask(
  bbox: [number, number, number, number],
  width: number,
  height: number,
): WireMask {
  const [bx, by, bw, bh] = bbox;
  const cx = bx + bw / 2;
  const cy = by + bh / 2;
  const rx = bw / 2;
  const ry = bh / 2;
  const raster = new Uint8Array(width * height);
  const x0 = Math.max(0, Math.floor(bx));
  const y0 = Math.max(0, Math.floor(by));
  const x1 = Math.min(width, Math.ceil(bx + bw));
  const y1 = Math.min(height, Math.ceil(by + bh));
  for (let y = y0; y < y1; y++) {
    for (let x = x0; x < x1; x++) {
      const dx = (x + 0.5 - cx) / rx;
      const dy = (y + 0.5 - cy) / ry;
      if (dx * dx + dy * dy <= 1) raster[y * width + x] = 1;
    }
  }
  return encodeMask(raster, width, height);
}
