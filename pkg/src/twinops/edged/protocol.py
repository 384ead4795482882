"""Wire format of the edge service.

Frames are a 4-byte big-endian length prefix followed by that many bytes
of UTF-8 JSON. The same JSON bodies travel unprefixed over the message
transport used by browsers. Requests carry an envelope:

    {"msg_id": int, "session_id": str, "kind": str,
     "payload": {...}, "client_send_ts_ms": float}

msg_id must be strictly increasing within a session. Every reply echoes
msg_id and adds ``server_recv_ts_ms``/``server_send_ts_ms`` taken from the
server's monotonic clock, so latency decomposes without comparing clocks
across machines. A reply's kind is ``<kind>_response`` (``ping`` gets
``pong``); failures use kind ``error`` and never close the session.
"""

from __future__ import annotations

import asyncio
import json
import struct
from typing import Optional

from twinops.errors import MalformedFrameError, UnknownKindError

#: Hard cap on frame bodies; oversized frames are discarded, not read.
MAX_FRAME_BYTES = 1 << 20

_HEADER = struct.Struct(">I")

#: Client request kinds the service dispatches.
REQUEST_KINDS = frozenset(
    {
        "ping",
        "hello",
        "alarm_batch",
        "localize_request",
        "nav_request",
        "card_id_request",
        "collab_join",
        "pose_update",
        "stroke_add",
        "chat_text",
    }
)

#: Server-initiated kinds (no reply expected).
PUSH_KINDS = frozenset(
    {
        "pose_broadcast",
        "stroke_broadcast",
        "chat_broadcast",
    }
)


def response_kind(request_kind: str) -> str:
    return "pong" if request_kind == "ping" else f"{request_kind}_response"


def encode_body(obj: dict) -> bytes:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True).encode("utf-8")


def decode_body(data: bytes) -> dict:
    try:
        obj = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, ValueError) as exc:
        raise MalformedFrameError(f"body is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedFrameError("body must be a JSON object")
    return obj


def encode_frame(obj: dict) -> bytes:
    body = encode_body(obj)
    if len(body) > MAX_FRAME_BYTES:
        raise MalformedFrameError(f"frame body {len(body)} B exceeds {MAX_FRAME_BYTES} B")
    return _HEADER.pack(len(body)) + body


async def read_frame(reader: asyncio.StreamReader) -> Optional[dict]:
    """Read one frame; None on clean EOF at a frame boundary.

    An oversized length prefix drains the advertised bytes to keep the
    stream in sync, then raises MalformedFrameError, as does a short body
    or an unparseable one.
    """
    header = await reader.read(_HEADER.size)
    if not header:
        return None
    while len(header) < _HEADER.size:
        chunk = await reader.read(_HEADER.size - len(header))
        if not chunk:
            raise MalformedFrameError("EOF inside frame header")
        header += chunk
    (length,) = _HEADER.unpack(header)
    if length > MAX_FRAME_BYTES:
        remaining = length
        while remaining > 0:
            chunk = await reader.read(min(remaining, 1 << 16))
            if not chunk:
                break
            remaining -= len(chunk)
        raise MalformedFrameError(f"frame of {length} B exceeds {MAX_FRAME_BYTES} B limit")
    try:
        body = await reader.readexactly(length)
    except asyncio.IncompleteReadError as exc:
        raise MalformedFrameError("EOF inside frame body") from exc
    return decode_body(body)


def validate_envelope(obj: dict) -> tuple[int, str, str, dict]:
    """Check request envelope shape; returns (msg_id, session_id, kind, payload)."""
    msg_id = obj.get("msg_id")
    if not isinstance(msg_id, int) or isinstance(msg_id, bool) or msg_id < 0:
        raise MalformedFrameError("msg_id must be a non-negative integer")
    session_id = obj.get("session_id")
    if not isinstance(session_id, str) or not session_id:
        raise MalformedFrameError("session_id must be a non-empty string")
    kind = obj.get("kind")
    if not isinstance(kind, str):
        raise MalformedFrameError("kind must be a string")
    payload = obj.get("payload", {})
    if not isinstance(payload, dict):
        raise MalformedFrameError("payload must be an object")
    ts = obj.get("client_send_ts_ms")
    if ts is not None and not isinstance(ts, (int, float)):
        raise MalformedFrameError("client_send_ts_ms must be a number")
    if kind not in REQUEST_KINDS:
        raise UnknownKindError(f"unknown kind {kind!r}")
    return msg_id, session_id, kind, payload


def make_response(
    msg_id: Optional[int],
    session_id: Optional[str],
    kind: str,
    payload: dict,
    server_recv_ts_ms: float,
    server_send_ts_ms: float,
) -> dict:
    return {
        "msg_id": msg_id,
        "session_id": session_id,
        "kind": kind,
        "payload": payload,
        "server_recv_ts_ms": server_recv_ts_ms,
        "server_send_ts_ms": server_send_ts_ms,
    }


def make_error(
    msg_id: Optional[int],
    session_id: Optional[str],
    code: str,
    message: str,
    server_recv_ts_ms: float,
    server_send_ts_ms: float,
) -> dict:
    return make_response(
        msg_id,
        session_id,
        "error",
        {"code": code, "message": message, "in_reply_to": msg_id},
        server_recv_ts_ms,
        server_send_ts_ms,
    )
