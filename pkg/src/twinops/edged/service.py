"""The edge service: TCP framed endpoint, browser endpoint, dispatch.

One service instance owns a loaded scenario, the live alarm set, and the
collaboration rooms. Sessions arrive over two transports carrying the same
JSON bodies: the length-prefixed TCP protocol and a WebSocket endpoint
(which also answers plain GET /scenario with the scenario snapshot so
clients can render before connecting).

Robustness contract: malformed frames earn an error frame and the session
stays open; every request gets exactly one response or error frame; frames
within a session are processed in arrival order. All state mutation runs
on the event loop thread, so rooms and the alarm feed need no locks.
"""

from __future__ import annotations

import asyncio
import http
import json
import re
import time
from typing import Awaitable, Callable, Optional

import websockets

from twinops import cardid, faultloc, navmap
from twinops.cardid import Detector, SyntheticDetector
from twinops.edged import protocol
from twinops.edged.collab import CollabHub, CollabObjectState, Room
from twinops.errors import (
    BindFailureError,
    MalformedFrameError,
    NotJoinedError,
    TwinError,
)
from twinops.faultloc import alarms_from_dicts
from twinops.scenario import ScenarioBundle


def _now_ms() -> float:
    return time.perf_counter_ns() / 1e6


def _parse_wire_alarms(raw) -> list:
    """Alarm dicts from a frame; shape problems become protocol errors."""
    if not isinstance(raw, list):
        raise MalformedFrameError("alarms must be a list")
    try:
        return alarms_from_dicts(raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFrameError(f"bad alarm entry: {exc}") from exc


def _error_code(exc: TwinError) -> str:
    """EmptyAlarmsError -> empty_alarms, NoPathError -> no_path, ..."""
    name = type(exc).__name__
    if name.endswith("Error"):
        name = name[: -len("Error")]
    return re.sub(r"(?<!^)(?=[A-Z])", "_", name).lower()


class _Session:
    """Per-session state shared by both transports."""

    def __init__(self, session_id: str, send: Callable[[dict], Awaitable[None]]):
        self.session_id = session_id
        self.send = send
        self.last_msg_id = -1
        self.capabilities: set[str] = set()
        self.send_lock = asyncio.Lock()

    async def deliver(self, body: dict) -> None:
        async with self.send_lock:
            await self.send(body)


class EdgeService:
    """Scenario-backed request server; use ``async with`` or start()/stop()."""

    def __init__(
        self,
        bundle: ScenarioBundle,
        host: str = "127.0.0.1",
        tcp_port: int = 0,
        ws_port: int = 0,
        seed: int = 0,
        detector: Optional[Detector] = None,
        detector_sigma: float = 0.0,
    ):
        self._bundle = bundle
        self._host = host
        self._tcp_port_req = tcp_port
        self._ws_port_req = ws_port
        self._alarms = list(bundle.alarms)
        self._hub = CollabHub()
        self._sessions: dict[str, _Session] = {}
        self._tcp_server: Optional[asyncio.AbstractServer] = None
        self._ws_server = None
        if detector is None:
            detector = SyntheticDetector(
                arrangements={
                    frame: bundle.frame_arrangement(frame) for frame in bundle.frames
                },
                sigma=detector_sigma,
                seed=seed,
            )
        self._detector = detector

    # -- lifecycle ---------------------------------------------------------

    async def start(self) -> "EdgeService":
        try:
            self._tcp_server = await asyncio.start_server(
                self._handle_tcp, self._host, self._tcp_port_req
            )
            self._ws_server = await websockets.serve(
                self._handle_ws,
                self._host,
                self._ws_port_req,
                process_request=self._process_http,
            )
        except OSError as exc:
            await self.stop()
            raise BindFailureError(f"cannot bind on {self._host}: {exc}") from exc
        return self

    async def stop(self) -> None:
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()
            self._tcp_server = None
        if self._ws_server is not None:
            self._ws_server.close()
            await self._ws_server.wait_closed()
            self._ws_server = None

    async def __aenter__(self) -> "EdgeService":
        return await self.start()

    async def __aexit__(self, *exc_info) -> None:
        await self.stop()

    @property
    def tcp_port(self) -> int:
        return self._tcp_server.sockets[0].getsockname()[1]

    @property
    def ws_port(self) -> int:
        return self._ws_server.sockets[0].getsockname()[1]

    @property
    def ws_url(self) -> str:
        return f"ws://{self._host}:{self.ws_port}/ws"

    # -- transports --------------------------------------------------------

    async def _handle_tcp(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        async def send(body: dict) -> None:
            writer.write(protocol.encode_frame(body))
            await writer.drain()

        bound: list[Optional[_Session]] = [None]
        try:
            while True:
                try:
                    frame = await protocol.read_frame(reader)
                except MalformedFrameError as exc:
                    t = _now_ms()
                    await send(
                        protocol.make_error(None, None, "malformed_frame", str(exc), t, _now_ms())
                    )
                    continue
                if frame is None:
                    return
                await self._handle_envelope(frame, send, bound, _now_ms())
        except (ConnectionError, asyncio.IncompleteReadError):
            pass
        finally:
            self._drop(bound[0])
            writer.close()
            try:
                await writer.wait_closed()
            except (ConnectionError, OSError):
                pass

    async def _handle_ws(self, connection):
        async def send(body: dict) -> None:
            await connection.send(protocol.encode_body(body).decode("utf-8"))

        bound: list[Optional[_Session]] = [None]
        try:
            async for message in connection:
                t_recv = _now_ms()
                if isinstance(message, bytes):
                    message = message.decode("utf-8", errors="replace")
                try:
                    obj = protocol.decode_body(message.encode("utf-8"))
                except MalformedFrameError as exc:
                    await send(
                        protocol.make_error(
                            None, None, "malformed_frame", str(exc), t_recv, _now_ms()
                        )
                    )
                    continue
                await self._handle_envelope(obj, send, bound, t_recv)
        except websockets.ConnectionClosed:
            pass
        finally:
            self._drop(bound[0])

    def _process_http(self, connection, request):
        """Plain-HTTP side door on the WS port; None continues the handshake."""
        path = request.path.split("?", 1)[0]
        if path == "/scenario":
            body = json.dumps(self._bundle.to_public_dict(), sort_keys=True)
            response = connection.respond(http.HTTPStatus.OK, body)
            # respond() presets text/plain; replace rather than append.
            del response.headers["Content-Type"]
            response.headers["Content-Type"] = "application/json"
            response.headers["Access-Control-Allow-Origin"] = "*"
            return response
        if path == "/healthz":
            return connection.respond(http.HTTPStatus.OK, "ok\n")
        return None

    def _drop(self, session: Optional[_Session]) -> None:
        if session is None:
            return
        self._hub.drop_session(session.session_id)
        if self._sessions.get(session.session_id) is session:
            del self._sessions[session.session_id]

    # -- dispatch ----------------------------------------------------------

    async def _handle_envelope(
        self,
        obj: dict,
        send: Callable[[dict], Awaitable[None]],
        bound: list,
        t_recv: float,
    ) -> None:
        raw_msg_id = obj.get("msg_id")
        echo_id = raw_msg_id if isinstance(raw_msg_id, int) and not isinstance(raw_msg_id, bool) else None
        try:
            msg_id, session_id, kind, payload = protocol.validate_envelope(obj)
        except TwinError as exc:
            await send(
                protocol.make_error(echo_id, None, _error_code(exc), str(exc), t_recv, _now_ms())
            )
            return

        session = bound[0]
        if session is None:
            session = self._sessions.get(session_id)
            if session is None:
                session = _Session(session_id, send)
                self._sessions[session_id] = session
            else:
                session.send = send  # reconnect takes the session over
            bound[0] = session
        elif session_id != session.session_id:
            await send(
                protocol.make_error(
                    echo_id,
                    session.session_id,
                    "session_mismatch",
                    f"connection is bound to session {session.session_id!r}",
                    t_recv,
                    _now_ms(),
                )
            )
            return

        if msg_id <= session.last_msg_id:
            await session.deliver(
                protocol.make_error(
                    echo_id,
                    session_id,
                    "bad_msg_id",
                    f"msg_id {msg_id} is not greater than {session.last_msg_id}",
                    t_recv,
                    _now_ms(),
                )
            )
            return
        session.last_msg_id = msg_id

        pushes: list[tuple[_Session, dict]] = []
        try:
            payload_out = self._dispatch(session, kind, payload, pushes)
            body = protocol.make_response(
                msg_id,
                session_id,
                protocol.response_kind(kind),
                payload_out,
                t_recv,
                _now_ms(),
            )
        except TwinError as exc:
            body = protocol.make_error(
                msg_id, session_id, _error_code(exc), str(exc), t_recv, _now_ms()
            )
        except Exception as exc:  # noqa: BLE001 - reply, never kill the session
            body = protocol.make_error(
                msg_id, session_id, "internal", f"{type(exc).__name__}: {exc}", t_recv, _now_ms()
            )
        await session.deliver(body)
        for target, push_body in pushes:
            try:
                await target.deliver(push_body)
            except Exception:  # noqa: BLE001 - a dead peer must not hurt the sender
                self._drop(target)

    def _push(self, kind: str, payload: dict) -> dict:
        t = _now_ms()
        return protocol.make_response(None, None, kind, payload, t, t)

    def _dispatch(
        self, session: _Session, kind: str, payload: dict, pushes: list
    ) -> dict:
        if kind == "ping":
            return dict(payload)

        if kind == "hello":
            caps = payload.get("capabilities", [])
            if not isinstance(caps, list) or not all(isinstance(c, str) for c in caps):
                raise MalformedFrameError("capabilities must be a list of strings")
            session.capabilities.update(caps)
            return {
                "server": "twinops-edged",
                "scenario": self._bundle.name,
                "capabilities": sorted(session.capabilities),
            }

        if kind == "alarm_batch":
            alarms = _parse_wire_alarms(payload.get("alarms"))
            for alarm in alarms:
                if alarm.element_id not in self._bundle.graph.elements:
                    raise MalformedFrameError(
                        f"alarm references unknown element {alarm.element_id!r}"
                    )
            self._alarms = alarms
            return {"count": len(alarms)}

        if kind == "localize_request":
            alarms = (
                _parse_wire_alarms(payload["alarms"])
                if "alarms" in payload
                else self._alarms
            )
            algo = payload.get("algo", "coverage")
            if algo == "coverage":
                result = faultloc.localize(self._bundle.graph, alarms)
            elif algo == "mp":
                result = faultloc.localize_mp(
                    self._bundle.graph, alarms, iterations=int(payload.get("iterations", 3))
                )
            else:
                raise MalformedFrameError(f"unknown algo {algo!r}")
            out = result.to_dict()
            out["algo"] = algo
            out["alarmed"] = sorted({a.element_id for a in alarms})
            return out

        if kind == "nav_request":
            grid = self._bundle.nav_grid()
            start = self._resolve_point(payload.get("from"), grid)
            goal = self._resolve_point(payload.get("to"), grid)
            shelf_level = payload.get("shelf_level", 0)
            if not isinstance(shelf_level, int) or isinstance(shelf_level, bool):
                raise MalformedFrameError("shelf_level must be an integer")
            cfg = self._bundle.nav
            spacing = float(payload.get("spacing_m", cfg.arrow_spacing_m))
            path = navmap.plan(
                grid,
                start,
                goal,
                shelf_level=shelf_level,
                spacing_m=spacing,
                flag_heights_m=cfg.flag_heights_m,
            )
            return path.to_dict()

        if kind == "card_id_request":
            if "card_id" not in session.capabilities:
                raise NotJoinedError(
                    "session lacks the card_id capability; declare it in hello or collab_join"
                )
            frame = payload.get("frame")
            if not isinstance(frame, str):
                raise MalformedFrameError("frame must be a string")
            arrangement = self._bundle.frame_arrangement(frame)
            detections = self._detector.detect(frame)
            assignment = cardid.match_slots(detections, arrangement)
            localization = None
            if self._alarms:
                localization = faultloc.localize(self._bundle.graph, self._alarms)
            items = cardid.overlay(
                detections, assignment, arrangement, localization, self._alarms
            )
            return {
                "frame": frame,
                "shelf": arrangement.shelf_id,
                "items": [item.to_dict() for item in items],
                "root_cause_visible": cardid.root_cause_visible(items),
                "detections": [d.to_dict() for d in detections],
                "unmatched_detections": list(assignment.unmatched_detections),
                "unmatched_slots": list(assignment.unmatched_slots),
            }

        if kind == "collab_join":
            room_name = payload.get("room", "main")
            if not isinstance(room_name, str) or not room_name:
                raise MalformedFrameError("room must be a non-empty string")
            caps = payload.get("capabilities", [])
            if not isinstance(caps, list) or not all(isinstance(c, str) for c in caps):
                raise MalformedFrameError("capabilities must be a list of strings")
            session.capabilities.update(caps)
            previous = self._hub.room_of(session.session_id)
            if previous is not None and previous.name != room_name:
                previous.leave(session.session_id)
            room = self._hub.room(room_name)
            room.join(session.session_id, session)
            return room.snapshot()

        if kind == "pose_update":
            room = self._require_room(session)
            try:
                state = CollabObjectState(
                    object_id=str(payload["object_id"]),
                    position=tuple(float(v) for v in payload["position"]),
                    orientation=tuple(float(v) for v in payload["orientation"]),
                    seq=int(payload["seq"]),
                    owner=session.session_id,
                )
                if len(state.position) != 3 or len(state.orientation) != 4:
                    raise ValueError("position is (x,y,z), orientation is (w,x,y,z)")
            except (KeyError, TypeError, ValueError) as exc:
                raise MalformedFrameError(f"bad pose_update payload: {exc}") from exc
            accepted, authoritative = room.apply_pose(session.session_id, state)
            if accepted:
                push = self._push("pose_broadcast", {"state": authoritative.to_dict()})
                for member in self._room_peers(room, session):
                    pushes.append((member, push))
            return {"accepted": accepted, "state": authoritative.to_dict()}

        if kind == "stroke_add":
            room = self._require_room(session)
            points = payload.get("points")
            if not isinstance(points, list):
                raise MalformedFrameError("points must be a list")
            try:
                stroke = room.add_stroke(
                    session.session_id,
                    points,
                    color=str(payload.get("color", "RED")),
                    stroke_id=(
                        str(payload["stroke_id"]) if "stroke_id" in payload else None
                    ),
                )
            except (TypeError, ValueError) as exc:
                raise MalformedFrameError(f"bad stroke points: {exc}") from exc
            push = self._push("stroke_broadcast", {"stroke": stroke.to_dict()})
            for member in self._room_peers(room, session):
                pushes.append((member, push))
            return {"stroke": stroke.to_dict()}

        if kind == "chat_text":
            room = self._require_room(session)
            text = payload.get("text")
            if not isinstance(text, str):
                raise MalformedFrameError("text must be a string")
            push = self._push(
                "chat_broadcast", {"from": session.session_id, "text": text}
            )
            peers = self._room_peers(room, session)
            for member in peers:
                pushes.append((member, push))
            return {"delivered": len(peers)}

        raise MalformedFrameError(f"unhandled kind {kind!r}")  # unreachable

    # -- dispatch helpers ----------------------------------------------------

    def _require_room(self, session: _Session) -> Room:
        room = self._hub.room_of(session.session_id)
        if room is None:
            raise NotJoinedError(f"session {session.session_id!r} has not joined a room")
        return room

    def _room_peers(self, room: Room, sender: _Session) -> list[_Session]:
        peers = []
        for sid in room.members:
            if sid == sender.session_id:
                continue
            target = self._sessions.get(sid)
            if target is not None:
                peers.append(target)
        return peers

    def _resolve_point(self, spec, grid) -> tuple[int, int]:
        if isinstance(spec, str):
            return self._bundle.point_cell(spec)
        if (
            isinstance(spec, (list, tuple))
            and len(spec) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in spec)
        ):
            return grid.cell_of(float(spec[0]), float(spec[1]))
        raise MalformedFrameError("endpoint must be a point name or [x, y] meters")

    # -- state the CLI and tests poke at ------------------------------------

    @property
    def alarms(self):
        return list(self._alarms)

    @property
    def bundle(self) -> ScenarioBundle:
        return self._bundle
