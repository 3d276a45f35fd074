"""Length-prefixed wire framing.

A frame is a 4-byte big-endian unsigned length N (N <= 65536) followed by N
bytes of UTF-8 JSON.  Every message object must carry `type` (str), `seq`
(int, sender-scoped) and `ts` (int ms, sender clock).

Decoding never raises on hostile input: every outcome is a Message (plain
dict) or a FrameError value.  Incomplete input is reported as a FrameError
with code E_INCOMPLETE and `bytes_needed` set, so stream readers know how
much more to wait for without treating it as a protocol violation.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

MAX_FRAME = 65536
MANDATORY = ("type", "seq", "ts")

E_OVERSIZE = "E_OVERSIZE"
E_BAD_JSON = "E_BAD_JSON"
E_MISSING_FIELD = "E_MISSING_FIELD"
E_INCOMPLETE = "E_INCOMPLETE"

_HEADER = struct.Struct(">I")


@dataclass(frozen=True)
class FrameError:
    code: str
    message: str
    bytes_needed: int = 0  # only set for E_INCOMPLETE

    @property
    def incomplete(self) -> bool:
        return self.code == E_INCOMPLETE


def encode_frame(msg: dict) -> bytes:
    """Serialize a message; raises ValueError on non-conforming input
    (encoding errors are caller bugs, unlike decoding's hostile input)."""
    for name in MANDATORY:
        if name not in msg:
            raise ValueError(f"message missing mandatory field {name!r}")
    body = json.dumps(msg, sort_keys=True, separators=(",", ":")).encode("utf-8")
    if len(body) > MAX_FRAME:
        raise ValueError(f"frame body {len(body)} bytes exceeds {MAX_FRAME}")
    return _HEADER.pack(len(body)) + body


def _check_body(body: bytes) -> dict | FrameError:
    try:
        msg = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        return FrameError(E_BAD_JSON, f"frame body is not valid JSON: {exc}")
    if not isinstance(msg, dict):
        return FrameError(E_BAD_JSON, "frame body must be a JSON object")
    for name in MANDATORY:
        if name not in msg:
            return FrameError(E_MISSING_FIELD, f"mandatory field {name!r} missing")
    if not isinstance(msg["type"], str):
        return FrameError(E_MISSING_FIELD, "field 'type' must be text")
    for name in ("seq", "ts"):
        if isinstance(msg[name], bool) or not isinstance(msg[name], int):
            return FrameError(E_MISSING_FIELD, f"field {name!r} must be an integer")
    return msg


def decode_frame(data: bytes) -> tuple[dict | FrameError, int]:
    """Decode the first frame in `data`; returns (result, bytes consumed).

    Consumed is 0 for incomplete input and for oversize headers (the stream
    cannot be resynchronized after a bad length, so the caller should drop
    the connection).
    """
    if len(data) < _HEADER.size:
        return FrameError(E_INCOMPLETE, "short header", _HEADER.size - len(data)), 0
    (length,) = _HEADER.unpack_from(data)
    if length > MAX_FRAME:
        return FrameError(E_OVERSIZE, f"declared length {length} exceeds {MAX_FRAME}"), 0
    end = _HEADER.size + length
    if len(data) < end:
        return FrameError(E_INCOMPLETE, "short body", end - len(data)), 0
    return _check_body(data[_HEADER.size : end]), end


class FrameDecoder:
    """Incremental decoder for a byte stream.

    feed() returns the completed messages/errors in arrival order.  After an
    E_OVERSIZE the decoder is dead: the length prefix cannot be trusted, so
    no resynchronization is attempted.
    """

    def __init__(self) -> None:
        self.buf = bytearray()
        self.dead = False

    def feed(self, data: bytes) -> list[dict | FrameError]:
        if self.dead:
            return []
        self.buf.extend(data)
        out: list[dict | FrameError] = []
        while True:
            result, consumed = decode_frame(bytes(self.buf))
            if isinstance(result, FrameError) and result.incomplete:
                break
            if consumed == 0:  # oversize
                self.dead = True
                out.append(result)
                break
            del self.buf[:consumed]
            out.append(result)
        return out
