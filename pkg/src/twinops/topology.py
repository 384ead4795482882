"""Card-level model of the optical transport network.

The network is a directed graph of card-level elements (transponders,
amplifiers, switches) and fiber spans, with wavelength paths routed over it.
Edges follow signal flow; a bidirectional link is two edges. Graphs are
immutable once built: mutation means building a new graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

from twinops.errors import (
    BrokenRouteError,
    DanglingEdgeError,
    DuplicateIdError,
    MissingLengthError,
    NotOnPathError,
    ScenarioInvalidError,
    UnknownElementError,
    UnknownShelfError,
)


class ElementKind(str, Enum):
    """The six card-level element kinds of the twin."""

    OT = "OT"            # optical transponder
    LA = "LA"            # line amplifier
    WSS = "WSS"          # wavelength selective switch
    AA = "AA"            # array amplifier
    MCS = "MCS"          # multicast switch
    FIBER_SPAN = "FIBER_SPAN"


@dataclass(frozen=True)
class Element:
    """One network element.

    ``shelf``/``slot`` locate a card physically; they are present together
    or not at all, and never on a fiber span.
    """

    id: str
    kind: ElementKind
    model: str = ""
    node: str = ""
    shelf: str | None = None
    slot: int | None = None


@dataclass(frozen=True)
class WavelengthPath:
    """An end-to-end lightpath: an ordered walk from source OT to destination OT."""

    id: str
    route: tuple[str, ...]
    line_rate_gbps: float = 0.0


@dataclass(frozen=True)
class SlotEntry:
    slot: int
    element_id: str
    model: str


@dataclass(frozen=True)
class ShelfArrangement:
    """Left-to-right physical card order of one shelf, ascending by slot index."""

    shelf_id: str
    slots: tuple[SlotEntry, ...]

    def models(self) -> tuple[str, ...]:
        return tuple(entry.model for entry in self.slots)


class TopologyGraph:
    """Validated, immutable signal-flow graph with wavelength paths.

    Safe to share across concurrent readers. Use :func:`build_graph` to
    construct one; the constructor performs no validation.
    """

    def __init__(
        self,
        elements: Mapping[str, Element],
        edges: frozenset[tuple[str, str]],
        paths: Mapping[str, WavelengthPath],
        fiber_lengths_km: Mapping[str, float],
    ):
        self.elements = dict(elements)
        self.edges = edges
        self.paths = dict(paths)
        self.fiber_lengths_km = dict(fiber_lengths_km)
        self._successors: dict[str, tuple[str, ...]] = {}
        succ: dict[str, list[str]] = {}
        for a, b in sorted(edges):
            succ.setdefault(a, []).append(b)
        for eid in self.elements:
            self._successors[eid] = tuple(succ.get(eid, ()))
        # element id -> path ids through it, in scenario path order
        self._paths_through: dict[str, tuple[str, ...]] = {eid: () for eid in self.elements}
        through: dict[str, list[str]] = {}
        for pid, path in self.paths.items():
            for eid in dict.fromkeys(path.route):
                through.setdefault(eid, []).append(pid)
        for eid, pids in through.items():
            self._paths_through[eid] = tuple(pids)

    def element(self, element_id: str) -> Element:
        try:
            return self.elements[element_id]
        except KeyError:
            raise UnknownElementError(f"unknown element {element_id!r}") from None

    def successors(self, element_id: str) -> tuple[str, ...]:
        return self._successors.get(element_id, ())

    def paths_through(self, element_id: str) -> tuple[str, ...]:
        """Path ids whose route contains the element, in scenario order."""
        return self._paths_through.get(element_id, ())

    def route_position(self, path_id: str, element_id: str) -> int:
        """Index of the first occurrence of the element on the path's route."""
        path = self.paths[path_id]
        try:
            return path.route.index(element_id)
        except ValueError:
            raise NotOnPathError(f"{element_id!r} is not on path {path_id!r}") from None

    def min_path_position(self, element_id: str) -> int:
        """Earliest route position of the element over all paths through it.

        Elements on no path sort last (a large sentinel), which keeps the
        localization tie-break total.
        """
        positions = [
            self.paths[pid].route.index(element_id)
            for pid in self.paths_through(element_id)
        ]
        return min(positions) if positions else 1 << 30

    def to_dict(self) -> dict:
        """Serializable form; feeding it back to build_graph reproduces the graph."""
        return {
            "elements": [
                {
                    "id": e.id,
                    "kind": e.kind.value,
                    "model": e.model,
                    "node": e.node,
                    "shelf": e.shelf,
                    "slot": e.slot,
                }
                for e in sorted(self.elements.values(), key=lambda e: e.id)
            ],
            "edges": sorted([a, b] for a, b in self.edges),
            "paths": [
                {"id": p.id, "route": list(p.route), "line_rate_gbps": p.line_rate_gbps}
                for p in self.paths.values()
            ],
            "fiber_lengths_km": dict(sorted(self.fiber_lengths_km.items())),
        }

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TopologyGraph):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return (
            f"TopologyGraph(elements={len(self.elements)}, "
            f"edges={len(self.edges)}, paths={len(self.paths)})"
        )


def build_graph(
    inventory: Iterable[Element],
    edges: Iterable[tuple[str, str]],
    paths: Iterable[WavelengthPath],
    lengths: Mapping[str, float] | None = None,
) -> TopologyGraph:
    """Validate the inventory and return an immutable :class:`TopologyGraph`.

    Raises:
        DuplicateIdError: two elements share an id.
        DanglingEdgeError: an edge endpoint (or a self-loop) is invalid.
        BrokenRouteError: a path route is empty, not OT-terminated, or not
            a walk in the edge set.
        MissingLengthError: a fiber span has no length entry.
        ScenarioInvalidError: shelf/slot fields inconsistent, or a length
            entry does not name a fiber span.
    """
    lengths = dict(lengths or {})
    elements: dict[str, Element] = {}
    for elem in inventory:
        if elem.id in elements:
            raise DuplicateIdError(f"duplicate element id {elem.id!r}")
        if (elem.shelf is None) != (elem.slot is None):
            raise ScenarioInvalidError(
                f"element {elem.id!r}: shelf and slot must be present together"
            )
        if elem.kind is ElementKind.FIBER_SPAN and elem.shelf is not None:
            raise ScenarioInvalidError(f"fiber span {elem.id!r} cannot have a shelf slot")
        if elem.slot is not None and elem.slot < 0:
            raise ScenarioInvalidError(f"element {elem.id!r}: slot must be >= 0")
        elements[elem.id] = elem

    edge_set: set[tuple[str, str]] = set()
    for a, b in edges:
        if a == b:
            raise DanglingEdgeError(f"self-loop edge on {a!r}")
        for end in (a, b):
            if end not in elements:
                raise DanglingEdgeError(f"edge ({a!r}, {b!r}) references unknown element {end!r}")
        edge_set.add((a, b))

    path_map: dict[str, WavelengthPath] = {}
    for path in paths:
        if path.id in path_map:
            raise DuplicateIdError(f"duplicate path id {path.id!r}")
        if not path.route:
            raise BrokenRouteError(f"path {path.id!r}: empty route")
        for eid in path.route:
            if eid not in elements:
                raise BrokenRouteError(f"path {path.id!r}: unknown element {eid!r} on route")
        for terminal in (path.route[0], path.route[-1]):
            if elements[terminal].kind is not ElementKind.OT:
                raise BrokenRouteError(
                    f"path {path.id!r}: route must start and end at an OT, got {terminal!r}"
                )
        for a, b in zip(path.route, path.route[1:]):
            if (a, b) not in edge_set:
                raise BrokenRouteError(f"path {path.id!r}: ({a!r}, {b!r}) is not an edge")
        path_map[path.id] = path

    for span_id in lengths:
        if span_id not in elements or elements[span_id].kind is not ElementKind.FIBER_SPAN:
            raise ScenarioInvalidError(f"length entry {span_id!r} is not a fiber span")
    for elem in elements.values():
        if elem.kind is ElementKind.FIBER_SPAN:
            if elem.id not in lengths:
                raise MissingLengthError(f"fiber span {elem.id!r} has no length")
            if lengths[elem.id] < 0:
                raise ScenarioInvalidError(f"fiber span {elem.id!r}: negative length")

    return TopologyGraph(elements, frozenset(edge_set), path_map, lengths)


def downstream(graph: TopologyGraph, element_id: str, path_id: str) -> list[str]:
    """Route suffix strictly after the element's first occurrence on the path."""
    if path_id not in graph.paths:
        raise NotOnPathError(f"unknown path {path_id!r}")
    pos = graph.route_position(path_id, element_id)
    return list(graph.paths[path_id].route[pos + 1:])


def build_arrangements(
    graph: TopologyGraph,
    shelves: Mapping[str, Sequence[tuple[int, str]]],
) -> dict[str, ShelfArrangement]:
    """Build shelf arrangements from ``shelf id -> [(slot, element id), ...]``.

    Slot order is normalized ascending; each element may appear in at most
    one arrangement and must carry matching shelf/slot fields.
    """
    seen: dict[str, str] = {}
    out: dict[str, ShelfArrangement] = {}
    for shelf_id, raw in shelves.items():
        entries = sorted((int(slot), eid) for slot, eid in raw)
        slots = []
        last_slot = None
        for slot, eid in entries:
            if eid not in graph.elements:
                raise ScenarioInvalidError(f"shelf {shelf_id!r}: unknown element {eid!r}")
            if slot == last_slot:
                raise ScenarioInvalidError(f"shelf {shelf_id!r}: duplicate slot {slot}")
            last_slot = slot
            if eid in seen:
                raise ScenarioInvalidError(
                    f"element {eid!r} appears in shelves {seen[eid]!r} and {shelf_id!r}"
                )
            seen[eid] = shelf_id
            elem = graph.elements[eid]
            if elem.shelf is not None and (elem.shelf != shelf_id or elem.slot != slot):
                raise ScenarioInvalidError(
                    f"element {eid!r} is housed at {elem.shelf}/{elem.slot}, "
                    f"not {shelf_id}/{slot}"
                )
            slots.append(SlotEntry(slot=slot, element_id=eid, model=elem.model))
        out[shelf_id] = ShelfArrangement(shelf_id=shelf_id, slots=tuple(slots))
    return out


def arrangement_for(
    arrangements: Mapping[str, ShelfArrangement], shelf_id: str
) -> ShelfArrangement:
    """Look up one shelf's arrangement."""
    try:
        return arrangements[shelf_id]
    except KeyError:
        raise UnknownShelfError(f"unknown shelf {shelf_id!r}") from None
