/**
 * Wire protocol between the tracking engine and a segmenter server.
 *
 * Newline-delimited JSON: one request per line in, one response per line
 * out. The engine opens a sequence, then strictly sequentially propagates
 * frame by frame, prompts with detection boxes, and drops memory entries.
 * Any malformed or out-of-order request is answered with a response whose
 * `error` field is set; the session survives and keeps serving.
 */

import { z } from "zod";

export const PROTOCOL_VERSION = 1;

export const BBoxSchema = z
  .tuple([z.number(), z.number(), z.number(), z.number()])
  .refine(([, , w, h]) => w > 0 && h > 0, { message: "bbox sides must be positive" });

export type BBox = z.infer<typeof BBoxSchema>;

const OpenSequenceSchema = z.object({
  kind: z.literal("OpenSequence"),
  sequence_id: z.string(),
  protocol: z.literal(PROTOCOL_VERSION),
  width: z.number().int().positive(),
  height: z.number().int().positive(),
  frames: z.number().int().positive(),
});

const PromptSchema = z.object({
  kind: z.literal("Prompt"),
  frame: z.number().int().nonnegative(),
  track_id: z.number().int(),
  bbox: BBoxSchema,
});

const PropagateSchema = z.object({
  kind: z.literal("Propagate"),
  frame: z.number().int().nonnegative(),
});

const DropMemorySchema = z.object({
  kind: z.literal("DropMemory"),
  track_id: z.number().int(),
  frame: z.number().int().nonnegative(),
});

const CloseSequenceSchema = z.object({ kind: z.literal("CloseSequence") });

export const RequestSchema = z.discriminatedUnion("kind", [
  OpenSequenceSchema,
  PromptSchema,
  PropagateSchema,
  DropMemorySchema,
  CloseSequenceSchema,
]);

export type SegmenterRequest = z.infer<typeof RequestSchema>;
export type OpenSequence = z.infer<typeof OpenSequenceSchema>;
export type Prompt = z.infer<typeof PromptSchema>;

/** Column-major run-length encoded binary mask, background run first. */
export interface WireMask {
  width: number;
  height: number;
  runs: number[];
}

export interface MaskEntry {
  track_id: number;
  mask: WireMask;
  occ: number;
}

export interface SegmenterResponse {
  frame: number;
  entries: MaskEntry[];
  error: string | null;
}

export function parseRequest(line: string): SegmenterRequest {
  let raw: unknown;
  try {
    raw = JSON.parse(line);
  } catch (e) {
    throw new Error(`request is not valid JSON: ${(e as Error).message}`);
  }
  const result = RequestSchema.safeParse(raw);
  if (!result.success) {
    throw new Error(`invalid request: ${result.error.issues[0]?.message ?? "schema error"}`);
  }
  return result.data;
}

export function encodeResponse(response: SegmenterResponse): string {
  return JSON.stringify(response);
}

export function errorResponse(frame: number, message: string): SegmenterResponse {
  return { frame, entries: [], error: message };
}
