"""Collaboration room state: object poses and stroke logs.

The server is authoritative. Pose updates follow last-writer-wins by
per-object sequence number: an update is accepted only if its seq exceeds
the stored one, and rejected writers get the authoritative state back so
their replica snaps into line. Strokes are append-only; once added they
never change. Everything here is pure state logic so it can be driven
directly by interleaving tests; the service layer adds the I/O.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from twinops.errors import InvalidStrokeError, NotJoinedError

QUAT_NORM_TOL = 1e-6


@dataclass(frozen=True)
class CollabObjectState:
    object_id: str
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float]  # (w, x, y, z), unit norm
    seq: int
    owner: str

    def __post_init__(self):
        norm = math.sqrt(sum(c * c for c in self.orientation))
        if abs(norm - 1.0) > QUAT_NORM_TOL:
            raise ValueError(f"orientation norm {norm} is not 1 within {QUAT_NORM_TOL}")

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "position": list(self.position),
            "orientation": list(self.orientation),
            "seq": self.seq,
            "owner": self.owner,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "CollabObjectState":
        return cls(
            object_id=str(raw["object_id"]),
            position=tuple(float(v) for v in raw["position"]),
            orientation=tuple(float(v) for v in raw["orientation"]),
            seq=int(raw["seq"]),
            owner=str(raw["owner"]),
        )


@dataclass(frozen=True)
class Stroke:
    stroke_id: str
    author: str
    points: tuple[tuple[float, float, float], ...]
    color: str = "RED"

    def __post_init__(self):
        if len(self.points) < 2:
            raise InvalidStrokeError("a stroke needs at least 2 points")

    def to_dict(self) -> dict:
        return {
            "stroke_id": self.stroke_id,
            "author": self.author,
            "color": self.color,
            "points": [list(p) for p in self.points],
        }


@dataclass
class Room:
    """One collaboration room; mutate only from the owning event loop."""

    name: str
    objects: dict[str, CollabObjectState] = field(default_factory=dict)
    strokes: list[Stroke] = field(default_factory=list)
    members: dict[str, object] = field(default_factory=dict)  # session_id -> handle
    _stroke_counter: int = 0

    def require_member(self, session_id: str) -> None:
        if session_id not in self.members:
            raise NotJoinedError(f"session {session_id!r} has not joined room {self.name!r}")

    def join(self, session_id: str, handle: object = None) -> None:
        self.members[session_id] = handle

    def leave(self, session_id: str) -> None:
        self.members.pop(session_id, None)

    def apply_pose(self, session_id: str, update: CollabObjectState) -> tuple[bool, CollabObjectState]:
        """LWW by seq; returns (accepted, authoritative state).

        First update for an object registers it. On rejection the stored
        state comes back unchanged so the writer can correct itself.
        """
        self.require_member(session_id)
        current = self.objects.get(update.object_id)
        if current is None or update.seq > current.seq:
            self.objects[update.object_id] = update
            return True, update
        return False, current

    def add_stroke(
        self,
        session_id: str,
        points,
        color: str = "RED",
        stroke_id: Optional[str] = None,
    ) -> Stroke:
        self.require_member(session_id)
        if stroke_id is None:
            self._stroke_counter += 1
            stroke_id = f"{self.name}-stroke-{self._stroke_counter}"
        stroke = Stroke(
            stroke_id=stroke_id,
            author=session_id,
            points=tuple(tuple(float(v) for v in p) for p in points),
            color=color,
        )
        self.strokes.append(stroke)
        return stroke

    def snapshot(self) -> dict:
        """Catch-up payload for joiners: members, all poses, full stroke log."""
        return {
            "room": self.name,
            "participants": sorted(self.members),
            "poses": {oid: st.to_dict() for oid, st in sorted(self.objects.items())},
            "strokes": [s.to_dict() for s in self.strokes],
        }


class CollabHub:
    """All rooms of one service instance."""

    def __init__(self):
        self._rooms: dict[str, Room] = {}

    def room(self, name: str) -> Room:
        if name not in self._rooms:
            self._rooms[name] = Room(name=name)
        return self._rooms[name]

    def room_of(self, session_id: str) -> Optional[Room]:
        for room in self._rooms.values():
            if session_id in room.members:
                return room
        return None

    def drop_session(self, session_id: str) -> None:
        for room in self._rooms.values():
            room.leave(session_id)
