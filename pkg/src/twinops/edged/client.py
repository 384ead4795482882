"""Minimal asyncio client for the framed TCP protocol.

Owns the session's msg_id counter, demultiplexes responses from server
pushes, and stamps every exchange with client-side monotonic timestamps so
callers can build LatencyRecords without touching the server clock.
"""

from __future__ import annotations

import asyncio
import itertools
import time
import uuid
from typing import Optional

from twinops.edged import protocol
from twinops.edged.latency import LatencyRecord, account_latency


def _now_ms() -> float:
    return time.perf_counter_ns() / 1e6


class EdgeClient:
    """One protocol session over TCP. Create with :meth:`connect`."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter, session_id: str):
        self._reader = reader
        self._writer = writer
        self.session_id = session_id
        self._msg_ids = itertools.count(1)
        self._pending: dict[int, asyncio.Future] = {}
        self.pushes: asyncio.Queue[dict] = asyncio.Queue()
        self._reader_task = asyncio.ensure_future(self._read_loop())

    @classmethod
    async def connect(
        cls, host: str, port: int, session_id: Optional[str] = None
    ) -> "EdgeClient":
        reader, writer = await asyncio.open_connection(host, port)
        return cls(reader, writer, session_id or f"cli-{uuid.uuid4().hex[:10]}")

    async def _read_loop(self) -> None:
        try:
            while True:
                frame = await protocol.read_frame(self._reader)
                if frame is None:
                    break
                t_recv = _now_ms()
                msg_id = frame.get("msg_id")
                fut = self._pending.pop(msg_id, None) if msg_id is not None else None
                if fut is not None and not fut.done():
                    fut.set_result((frame, t_recv))
                else:
                    await self.pushes.put(frame)
        except Exception:  # noqa: BLE001 - reader death resolves via futures below
            pass
        finally:
            for fut in self._pending.values():
                if not fut.done():
                    fut.set_exception(ConnectionError("connection closed"))
            self._pending.clear()

    async def request(
        self, kind: str, payload: Optional[dict] = None, timeout: float = 30.0
    ) -> tuple[dict, Optional[LatencyRecord]]:
        """Send one request; returns (reply frame, latency record).

        The latency record is None when the reply lacks server timestamps.
        Error frames are returned, not raised; callers check ``kind``.
        """
        msg_id = next(self._msg_ids)
        t_send = _now_ms()
        body = {
            "msg_id": msg_id,
            "session_id": self.session_id,
            "kind": kind,
            "payload": payload or {},
            "client_send_ts_ms": t_send,
        }
        fut: asyncio.Future = asyncio.get_running_loop().create_future()
        self._pending[msg_id] = fut
        self._writer.write(protocol.encode_frame(body))
        await self._writer.drain()
        frame, t_recv = await asyncio.wait_for(fut, timeout)
        record = None
        srv_recv = frame.get("server_recv_ts_ms")
        srv_send = frame.get("server_send_ts_ms")
        if isinstance(srv_recv, (int, float)) and isinstance(srv_send, (int, float)):
            record = account_latency(msg_id, t_send, t_recv, srv_recv, srv_send)
        return frame, record

    async def send_raw(self, body: bytes) -> None:
        """Ship arbitrary bytes down the socket (fuzzing hook)."""
        self._writer.write(body)
        await self._writer.drain()

    async def next_push(self, timeout: float = 10.0) -> dict:
        return await asyncio.wait_for(self.pushes.get(), timeout)

    async def close(self) -> None:
        self._reader_task.cancel()
        try:
            await self._reader_task
        except asyncio.CancelledError:
            pass
        except Exception:  # noqa: BLE001
            pass
        self._writer.close()
        try:
            await self._writer.wait_closed()
        except (ConnectionError, OSError):
            pass
