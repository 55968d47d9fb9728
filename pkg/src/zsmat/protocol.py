"""The engine <-> segmenter contract.

A segmenter session serves one video sequence.  The engine opens the
sequence, then per frame asks the segmenter to propagate every registered
track, prompts it with detection boxes to create or rebase tracks, and may
drop individual memory entries so an occluded track's memory is not
contaminated by the occluder.  Requests are strictly sequential; the engine
never pipelines, because segmenter memory semantics are order-dependent.

Wire binding: newline-delimited JSON over the external segmenter's stdio
(or a TCP socket), one request per line, one response per line.

    -> {"kind": "OpenSequence", "sequence_id": "s0", "protocol": 1,
        "width": 64, "height": 48, "frames": 100}
    -> {"kind": "Propagate", "frame": 0}
    -> {"kind": "Prompt", "frame": 0, "track_id": 1, "bbox": [4.0, 5.0, 10.0, 8.0]}
    -> {"kind": "DropMemory", "track_id": 1, "frame": 0}
    -> {"kind": "CloseSequence"}

Every response has the shape

    <- {"frame": 0, "entries": [{"track_id": 1, "mask": {"width": 64,
        "height": 48, "runs": [...]}, "occ": 9.5}], "error": null}

with ``entries`` holding one entry per active track on Propagate and exactly
one entry on Prompt.  Protocol violations are answered with a non-null
``error`` string; the engine aborts the sequence when it sees one.
Propagate frames must start at 0 and advance by exactly 1.  DropMemory is
idempotent and tolerates unknown tracks.
"""

from __future__ import annotations

import json
import math
import shlex
import socket
import subprocess
from abc import ABC, abstractmethod
from dataclasses import dataclass

from .errors import ProtocolError, TrackingAbort
from .geometry import BBox, BitMask, OcclusionScore

PROTOCOL_VERSION = 1

REQUEST_KINDS = ("OpenSequence", "Prompt", "Propagate", "DropMemory", "CloseSequence")


@dataclass(frozen=True)
class MaskEntry:
    track_id: int
    mask: BitMask
    occ: OcclusionScore


@dataclass(frozen=True)
class SegmenterResponse:
    frame: int
    entries: tuple[MaskEntry, ...]
    error: str | None = None


class SegmenterSession(ABC):
    """One segmenter session per sequence; single-threaded by contract."""

    @abstractmethod
    def open(self, sequence_id: str, width: int, height: int, frames: int) -> None: ...

    @abstractmethod
    def prompt(self, frame: int, track_id: int, bbox: BBox) -> tuple[BitMask, OcclusionScore]:
        """Register/rebase a track from a box prompt; returns its mask and score."""

    @abstractmethod
    def propagate(self, frame: int) -> list[MaskEntry]:
        """Advance to ``frame`` and return one entry per registered track."""

    @abstractmethod
    def drop_memory(self, track_id: int, frame: int) -> None:
        """Discard the memory entry for (track, frame); idempotent."""

    @abstractmethod
    def close(self) -> None: ...


# --------------------------------------------------------------------------
# Codec


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ProtocolError(msg)


def _as_int(obj: dict, key: str) -> int:
    _require(key in obj, f"missing field '{key}'")
    v = obj[key]
    _require(isinstance(v, int) and not isinstance(v, bool), f"field '{key}' must be an integer")
    return v


def encode_request(req: dict) -> str:
    return json.dumps(req, separators=(",", ":"))


def decode_request(line: str) -> dict:
    """Parse and structurally validate one request line."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"request is not valid JSON: {e}") from e
    _require(isinstance(obj, dict), "request must be a JSON object")
    kind = obj.get("kind")
    _require(kind in REQUEST_KINDS, f"unknown request kind {kind!r}")
    if kind == "OpenSequence":
        _require(isinstance(obj.get("sequence_id"), str), "sequence_id must be a string")
        _require(_as_int(obj, "protocol") == PROTOCOL_VERSION, "unsupported protocol version")
        for key in ("width", "height", "frames"):
            _require(_as_int(obj, key) > 0, f"field '{key}' must be positive")
    elif kind == "Prompt":
        _as_int(obj, "frame")
        _as_int(obj, "track_id")
        bbox = obj.get("bbox")
        _require(
            isinstance(bbox, list) and len(bbox) == 4
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox),
            "bbox must be a list of four numbers",
        )
        _require(bbox[2] > 0 and bbox[3] > 0, "bbox sides must be positive")
    elif kind == "Propagate":
        _as_int(obj, "frame")
    elif kind == "DropMemory":
        _as_int(obj, "frame")
        _as_int(obj, "track_id")
    return obj


def mask_to_wire(mask: BitMask) -> dict:
    return {"width": mask.width, "height": mask.height, "runs": list(mask.runs)}


def mask_from_wire(obj: dict) -> BitMask:
    _require(isinstance(obj, dict), "mask must be a JSON object")
    runs = obj.get("runs")
    _require(
        isinstance(runs, list) and all(isinstance(r, int) and not isinstance(r, bool) for r in runs),
        "mask runs must be a list of integers",
    )
    try:
        return BitMask(width=_as_int(obj, "width"), height=_as_int(obj, "height"), runs=tuple(runs))
    except ValueError as e:
        raise ProtocolError(f"invalid mask: {e}") from e


def encode_response(resp: SegmenterResponse) -> str:
    obj = {
        "frame": resp.frame,
        "entries": [
            {"track_id": e.track_id, "mask": mask_to_wire(e.mask), "occ": e.occ}
            for e in resp.entries
        ],
        "error": resp.error,
    }
    return json.dumps(obj, separators=(",", ":"))


def decode_response(line: str) -> SegmenterResponse:
    """Parse and structurally validate one response line."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"response is not valid JSON: {e}") from e
    _require(isinstance(obj, dict), "response must be a JSON object")
    error = obj.get("error")
    _require(error is None or isinstance(error, str), "error must be null or a string")
    frame = _as_int(obj, "frame")
    raw_entries = obj.get("entries")
    _require(isinstance(raw_entries, list), "entries must be a list")
    entries = []
    for raw in raw_entries:
        _require(isinstance(raw, dict), "entry must be a JSON object")
        occ = raw.get("occ")
        _require(
            isinstance(occ, (int, float)) and not isinstance(occ, bool) and math.isfinite(occ),
            "occ must be a finite number",
        )
        entries.append(
            MaskEntry(track_id=_as_int(raw, "track_id"), mask=mask_from_wire(raw.get("mask")), occ=float(occ))
        )
    return SegmenterResponse(frame=frame, entries=tuple(entries), error=error)


# --------------------------------------------------------------------------
# Transports and the wire-backed session


class Transport(ABC):
    @abstractmethod
    def send_line(self, line: str) -> None: ...

    @abstractmethod
    def recv_line(self) -> str: ...

    @abstractmethod
    def close(self) -> None: ...


class SubprocessTransport(Transport):
    """Speaks the protocol over a child process's stdio."""

    def __init__(self, command: str | list[str]):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        self._proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
        )

    def send_line(self, line: str) -> None:
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as e:
            raise TrackingAbort(f"segmenter process pipe closed: {e}") from e

    def recv_line(self) -> str:
        line = self._proc.stdout.readline()
        if not line:
            code = self._proc.poll()
            raise TrackingAbort(f"segmenter process closed its stdout (exit code {code})")
        return line.rstrip("\n")

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()


class TcpTransport(Transport):
    def __init__(self, host: str, port: int):
        self._sock = socket.create_connection((host, port))
        self._reader = self._sock.makefile("r")

    def send_line(self, line: str) -> None:
        try:
            self._sock.sendall((line + "\n").encode())
        except OSError as e:
            raise TrackingAbort(f"segmenter socket closed: {e}") from e

    def recv_line(self) -> str:
        line = self._reader.readline()
        if not line:
            raise TrackingAbort("segmenter socket closed")
        return line.rstrip("\n")

    def close(self) -> None:
        try:
            self._reader.close()
            self._sock.close()
        except OSError:
            pass


class WireSession(SegmenterSession):
    """Session backed by an external segmenter over a line transport.

    Any error response or transport failure raises TrackingAbort: the
    sequence cannot be salvaged once the segmenter state is unknown.
    """

    def __init__(self, transport: Transport):
        self._transport = transport

    def _roundtrip(self, req: dict) -> SegmenterResponse:
        self._transport.send_line(encode_request(req))
        try:
            resp = decode_response(self._transport.recv_line())
        except ProtocolError as e:
            raise TrackingAbort(f"malformed segmenter response: {e}") from e
        if resp.error is not None:
            raise TrackingAbort(f"segmenter error: {resp.error}")
        return resp

    def open(self, sequence_id: str, width: int, height: int, frames: int) -> None:
        self._roundtrip(
            {
                "kind": "OpenSequence",
                "sequence_id": sequence_id,
                "protocol": PROTOCOL_VERSION,
                "width": width,
                "height": height,
                "frames": frames,
            }
        )

    def prompt(self, frame: int, track_id: int, bbox: BBox) -> tuple[BitMask, OcclusionScore]:
        resp = self._roundtrip(
            {"kind": "Prompt", "frame": frame, "track_id": track_id, "bbox": list(bbox.as_xywh())}
        )
        if len(resp.entries) != 1 or resp.entries[0].track_id != track_id:
            raise TrackingAbort("prompt response must carry exactly one entry for the prompted track")
        return resp.entries[0].mask, resp.entries[0].occ

    def propagate(self, frame: int) -> list[MaskEntry]:
        return list(self._roundtrip({"kind": "Propagate", "frame": frame}).entries)

    def drop_memory(self, track_id: int, frame: int) -> None:
        self._roundtrip({"kind": "DropMemory", "track_id": track_id, "frame": frame})

    def close(self) -> None:
        try:
            self._roundtrip({"kind": "CloseSequence"})
        except TrackingAbort:
            pass
        self._transport.close()


# --------------------------------------------------------------------------
# Server side (drives any in-process session over text streams)


class SessionServer:
    """Maps raw request lines onto a session; one server per sequence.

    Malformed lines and protocol violations are answered with an error
    response and the server keeps serving, so a client mistake is
    observable rather than fatal.
    """

    def __init__(self, session: SegmenterSession):
        self._session = session
        self._last_frame = -1
        self.closed = False

    def handle_line(self, raw: str) -> str:
        return encode_response(self._handle(raw))

    def _handle(self, raw: str) -> SegmenterResponse:
        def fail(msg: str) -> SegmenterResponse:
            return SegmenterResponse(frame=self._last_frame, entries=(), error=msg)

        try:
            req = decode_request(raw)
        except ProtocolError as e:
            return fail(str(e))
        kind = req["kind"]
        try:
            if kind == "OpenSequence":
                self._session.open(req["sequence_id"], req["width"], req["height"], req["frames"])
                return SegmenterResponse(frame=-1, entries=())
            if kind == "Prompt":
                frame = req["frame"]
                mask, occ = self._session.prompt(frame, req["track_id"], BBox(*req["bbox"]))
                return SegmenterResponse(
                    frame=frame, entries=(MaskEntry(req["track_id"], mask, occ),)
                )
            if kind == "Propagate":
                entries = self._session.propagate(req["frame"])
                self._last_frame = req["frame"]
                return SegmenterResponse(frame=req["frame"], entries=tuple(entries))
            if kind == "DropMemory":
                self._session.drop_memory(req["track_id"], req["frame"])
                return SegmenterResponse(frame=req["frame"], entries=())
            self._session.close()
            self.closed = True
            return SegmenterResponse(frame=self._last_frame, entries=())
        except (ProtocolError, ValueError) as e:
            return fail(str(e))


def serve_session(session: SegmenterSession, reader, writer) -> None:
    """Serve one session over line streams until CloseSequence or EOF."""
    server = SessionServer(session)
    for raw in reader:
        raw = raw.strip()
        if not raw:
            continue
        writer.write(server.handle_line(raw) + "\n")
        writer.flush()
        if server.closed:
            return
