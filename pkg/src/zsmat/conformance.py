"""Protocol conformance checks for segmenter implementations.

The driver speaks raw request lines through an ``exchange`` callable and
collects violations instead of raising, so one run reports everything that
is wrong with an implementation.  It covers the schema of every response,
the exactly-one-entry contract of prompts, strict frame monotonicity
(out-of-order propagation must be answered with an error and must not kill
the session), idempotent memory drops including unknown tracks, and
survival of malformed request lines.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ProtocolError
from .protocol import (
    PROTOCOL_VERSION,
    SegmenterResponse,
    Transport,
    decode_response,
    encode_request,
)

Exchange = Callable[[str], str]


def transport_exchange(transport: Transport) -> Exchange:
    def exchange(line: str) -> str:
        transport.send_line(line)
        return transport.recv_line()

    return exchange


class _Checker:
    def __init__(self, exchange: Exchange):
        self._exchange = exchange
        self.violations: list[str] = []

    def send(self, request: dict, context: str) -> SegmenterResponse | None:
        return self.send_raw(encode_request(request), context)

    def send_raw(self, line: str, context: str) -> SegmenterResponse | None:
        try:
            raw = self._exchange(line)
        except Exception as e:  # transport died: fatal for the whole run
            self.violations.append(f"{context}: transport failed: {e}")
            return None
        try:
            return decode_response(raw)
        except ProtocolError as e:
            self.violations.append(f"{context}: malformed response: {e}")
            return None

    def expect_ok(self, request: dict, context: str) -> SegmenterResponse | None:
        resp = self.send(request, context)
        if resp is not None and resp.error is not None:
            self.violations.append(f"{context}: unexpected error response: {resp.error}")
            return None
        return resp

    def expect_error(self, request: dict, context: str) -> None:
        resp = self.send(request, context)
        if resp is not None and resp.error is None:
            self.violations.append(f"{context}: expected an error response, got success")

    def note(self, cond: bool, message: str) -> None:
        if not cond:
            self.violations.append(message)


def run_conformance(
    exchange: Exchange,
    width: int,
    height: int,
    frames: int,
    sequence_id: str = "conformance",
    seed: int = 0,
) -> list[str]:
    """Run the scripted + fuzzed transcript; returns the list of violations."""
    rng = np.random.default_rng(seed)
    c = _Checker(exchange)

    def check_entries(
        resp: SegmenterResponse | None,
        context: str,
        must_include=None,
        allowed=None,
    ) -> None:
        """Entries must be unique, dimensioned, cover every live track and
        contain nothing that was never prompted.  Tracks whose only memory
        entry (their prompt) was dropped may or may not appear; whether such
        a rollback removes the track is implementation-defined."""
        if resp is None:
            return
        ids = [e.track_id for e in resp.entries]
        c.note(len(ids) == len(set(ids)), f"{context}: duplicate track ids in entries")
        for e in resp.entries:
            c.note(
                (e.mask.width, e.mask.height) == (width, height),
                f"{context}: mask dims {e.mask.width}x{e.mask.height} differ from sequence {width}x{height}",
            )
        if must_include is not None:
            missing = sorted(set(must_include) - set(ids))
            c.note(not missing, f"{context}: entries missing live tracks {missing}")
        if allowed is not None:
            stray = sorted(set(ids) - set(allowed))
            c.note(not stray, f"{context}: entries for never-prompted tracks {stray}")

    def random_box() -> list[float]:
        w = float(rng.uniform(2.0, max(3.0, width / 2)))
        h = float(rng.uniform(2.0, max(3.0, height / 2)))
        x = float(rng.uniform(0.0, width - w))
        y = float(rng.uniform(0.0, height - h))
        return [x, y, w, h]

    # Handshake.
    c.expect_ok(
        {
            "kind": "OpenSequence",
            "sequence_id": sequence_id,
            "protocol": PROTOCOL_VERSION,
            "width": width,
            "height": height,
            "frames": frames,
        },
        "handshake",
    )

    # Frame 0: empty propagation, then a first prompt.
    resp = c.expect_ok({"kind": "Propagate", "frame": 0}, "propagate frame 0")
    check_entries(resp, "propagate frame 0", must_include=[], allowed=[])

    resp = c.expect_ok(
        {"kind": "Prompt", "frame": 0, "track_id": 1, "bbox": random_box()}, "first prompt"
    )
    if resp is not None:
        c.note(
            len(resp.entries) == 1 and resp.entries[0].track_id == 1,
            "first prompt: response must carry exactly one entry for the prompted track",
        )
    check_entries(resp, "first prompt")

    # Prompts must target the current frame.
    c.expect_error(
        {"kind": "Prompt", "frame": min(5, frames - 1) if frames > 1 else 1, "track_id": 2, "bbox": random_box()},
        "prompt at a non-current frame",
    )

    # Strict monotonicity: skipping a frame is rejected, the session survives.
    c.expect_error({"kind": "Propagate", "frame": 2}, "propagate skipping a frame")
    c.expect_error({"kind": "Propagate", "frame": 0}, "propagate repeating a frame")
    resp = c.expect_ok({"kind": "Propagate", "frame": 1}, "propagate frame 1 after rejected skip")
    check_entries(resp, "propagate frame 1", must_include=[1], allowed=[1])

    # DropMemory: unknown track tolerated, repeated drop idempotent.
    c.expect_ok({"kind": "DropMemory", "track_id": 999, "frame": 1}, "drop for unknown track")
    c.expect_ok({"kind": "DropMemory", "track_id": 1, "frame": 1}, "drop (1, 1)")
    c.expect_ok({"kind": "DropMemory", "track_id": 1, "frame": 1}, "repeated drop (1, 1)")

    # Malformed lines get an error response and do not kill the session.
    c.expect_error({"kind": "Nonsense"}, "unknown request kind")
    raw_resp = c.send_raw("this is not json", "malformed json line")
    if raw_resp is not None:
        c.note(raw_resp.error is not None, "malformed json line: expected an error response")
    c.expect_error(
        {"kind": "Prompt", "frame": 1, "track_id": 3, "bbox": [0, 0, -5, 2]},
        "prompt with a degenerate box",
    )

    # Fuzzed schedule: march through the remaining frames, prompting and
    # dropping at random; every response must stay schema-clean.
    prompt_frames = {1: 0}  # track id -> last prompt frame
    optional: set[int] = set()  # rollback-dropped: presence implementation-defined
    next_track = 10
    for frame in range(2, frames):
        live = [t for t in prompt_frames if t not in optional]
        resp = c.expect_ok({"kind": "Propagate", "frame": frame}, f"propagate frame {frame}")
        check_entries(
            resp, f"propagate frame {frame}", must_include=live, allowed=list(prompt_frames)
        )
        if rng.random() < 0.4:
            resp = c.expect_ok(
                {"kind": "Prompt", "frame": frame, "track_id": next_track, "bbox": random_box()},
                f"fuzz prompt frame {frame}",
            )
            if resp is not None:
                c.note(
                    len(resp.entries) == 1 and resp.entries[0].track_id == next_track,
                    f"fuzz prompt frame {frame}: exactly one entry for the prompted track",
                )
                prompt_frames[next_track] = frame
                next_track += 1
        live = [t for t in prompt_frames if t not in optional]
        if live and rng.random() < 0.3:
            victim = int(rng.choice(live))
            c.expect_ok(
                {"kind": "DropMemory", "track_id": victim, "frame": frame},
                f"fuzz drop frame {frame}",
            )
            if prompt_frames[victim] == frame:
                optional.add(victim)

    c.expect_ok({"kind": "CloseSequence"}, "close")
    return c.violations
