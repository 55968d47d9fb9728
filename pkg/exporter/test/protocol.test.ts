import { describe, expect, it } from "vitest";

import { encodeResponse, errorResponse, parseRequest } from "../src/protocol.js";

describe("parseRequest", () => {
  it("accepts every request kind", () => {
    const lines = [
      '{"kind":"OpenSequence","sequence_id":"s","protocol":1,"width":10,"height":8,"frames":3}',
      '{"kind":"Propagate","frame":0}',
      '{"kind":"Prompt","frame":0,"track_id":1,"bbox":[1,2,3,4]}',
      '{"kind":"DropMemory","track_id":1,"frame":0}',
      '{"kind":"CloseSequence"}',
    ];
    for (const line of lines) {
      expect(parseRequest(line).kind).toBeTruthy();
    }
  });

  it("rejects malformed json", () => {
    expect(() => parseRequest("{nope")).toThrow(/not valid JSON/);
  });

  it("rejects unknown kinds", () => {
    expect(() => parseRequest('{"kind":"Explode"}')).toThrow(/invalid request/);
  });

  it("rejects degenerate boxes", () => {
    expect(() =>
      parseRequest('{"kind":"Prompt","frame":0,"track_id":1,"bbox":[0,0,-1,4]}'),
    ).toThrow(/invalid request/);
  });

  it("rejects wrong protocol versions", () => {
    expect(() =>
      parseRequest('{"kind":"OpenSequence","sequence_id":"s","protocol":9,"width":1,"height":1,"frames":1}'),
    ).toThrow(/invalid request/);
  });
});

describe("encodeResponse", () => {
  it("round-trips through JSON with a null error", () => {
    const line = encodeResponse({ frame: 3, entries: [], error: null });
    expect(JSON.parse(line)).toEqual({ frame: 3, entries: [], error: null });
  });

  it("carries error strings", () => {
    const parsed = JSON.parse(encodeResponse(errorResponse(2, "boom")));
    expect(parsed.error).toBe("boom");
    expect(parsed.entries).toEqual([]);
  });
});
