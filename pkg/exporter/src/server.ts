/**
 * Session server: enforces the protocol rules around any backend.
 *
 * One sequence per session. Propagation must start at frame 0 and advance
 * by exactly one; prompts must target the frame most recently propagated;
 * memory drops may not reference future frames and are idempotent.
 * Violations and malformed lines get an error response, never a crash.
 */

import * as net from "node:net";
import * as readline from "node:readline";
import type { Readable, Writable } from "node:stream";

import { encodeResponse, errorResponse, parseRequest, type SegmenterResponse } from "./protocol.js";
import type { SegmenterBackend } from "./segmenter.js";

export class SessionServer {
  private open = false;
  private framesPropagated = 0;
  private totalFrames = 0;
  closed = false;

  constructor(private readonly backend: SegmenterBackend) {}

  handleLine(line: string): string {
    return encodeResponse(this.handle(line));
  }

  private get currentFrame(): number {
    return this.framesPropagated - 1;
  }

  private handle(line: string): SegmenterResponse {
    let request;
    try {
      request = parseRequest(line);
    } catch (e) {
      return errorResponse(this.currentFrame, (e as Error).message);
    }
    try {
      switch (request.kind) {
        case "OpenSequence": {
          if (this.open) return errorResponse(this.currentFrame, "sequence already open");
          this.backend.open(request.sequence_id, request.width, request.height, request.frames);
          this.open = true;
          this.totalFrames = request.frames;
          return { frame: -1, entries: [], error: null };
        }
        case "Propagate": {
          if (!this.open) return errorResponse(this.currentFrame, "no open sequence");
          if (request.frame !== this.framesPropagated) {
            return errorResponse(
              this.currentFrame,
              `propagate frame ${request.frame} is out of order, expected ${this.framesPropagated}`,
            );
          }
          if (request.frame >= this.totalFrames) {
            return errorResponse(this.currentFrame, `frame ${request.frame} is beyond the sequence end`);
          }
          const entries = this.backend.propagate(request.frame);
          this.framesPropagated++;
          return { frame: request.frame, entries, error: null };
        }
        case "Prompt": {
          if (!this.open) return errorResponse(this.currentFrame, "no open sequence");
          if (request.frame !== this.currentFrame) {
            return errorResponse(
              this.currentFrame,
              `prompt frame ${request.frame} is not the current frame ${this.currentFrame}`,
            );
          }
          const entry = this.backend.prompt(request.frame, request.track_id, request.bbox);
          return { frame: request.frame, entries: [entry], error: null };
        }
        case "DropMemory": {
          if (!this.open) return errorResponse(this.currentFrame, "no open sequence");
          if (request.frame > this.currentFrame) {
            return errorResponse(this.currentFrame, `cannot drop memory of future frame ${request.frame}`);
          }
          this.backend.dropMemory(request.track_id, request.frame);
          return { frame: request.frame, entries: [], error: null };
        }
        case "CloseSequence": {
          if (this.open) this.backend.close();
          this.open = false;
          this.closed = true;
          return { frame: this.currentFrame, entries: [], error: null };
        }
      }
    } catch (e) {
      return errorResponse(this.currentFrame, (e as Error).message);
    }
  }
}

/** Serve one session over a pair of line streams until close or EOF. */
export async function serveStreams(
  backend: SegmenterBackend,
  input: Readable,
  output: Writable,
): Promise<void> {
  const server = new SessionServer(backend);
  const lines = readline.createInterface({ input, crlfDelay: Infinity });
  for await (const line of lines) {
    if (!line.trim()) continue;
    output.write(server.handleLine(line.trim()) + "\n");
    if (server.closed) break;
  }
}

/** Accept a single connection on the port and serve one session on it. */
export function serveTcp(backend: SegmenterBackend, port: number): Promise<void> {
  return new Promise((resolve, reject) => {
    const server = net.createServer((socket) => {
      serveStreams(backend, socket, socket)
        .then(() => {
          socket.end();
          server.close();
          resolve();
        })
        .catch(reject);
    });
    server.on("error", reject);
    server.listen(port, "127.0.0.1");
  });
}
