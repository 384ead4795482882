"""Scenario bundles: one JSON file wiring topology, alarms, map, and QoS.

A scenario is the unit the CLI and the edge service load: network
inventory and wavelength paths, the active alarm set, a reference to the
facility voxel map plus named world points, shelf layouts with synthetic
camera frames, and QoS defaults. Loading validates every cross-reference;
anything inconsistent raises ScenarioInvalidError up front rather than
failing mid-run.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

from twinops import navmap, netqos
from twinops.errors import ScenarioInvalidError, TwinError, UnknownPointError
from twinops.faultloc import Alarm, alarms_from_dicts
from twinops.navmap import Grid2D, OccupancyGrid3D
from twinops.netqos import FlowSpec, LinkSpec, MeterSpec, WifiSpec
from twinops.topology import (
    Element,
    ElementKind,
    ShelfArrangement,
    TopologyGraph,
    WavelengthPath,
    build_arrangements,
    build_graph,
)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class NavConfig:
    envmap_path: str
    slab_m: tuple[float, float] = (0.1, 1.8)
    arrow_spacing_m: float = navmap.DEFAULT_ARROW_SPACING_M
    flag_heights_m: tuple[float, float] = navmap.DEFAULT_FLAG_HEIGHTS


@dataclass(frozen=True)
class QosConfig:
    link: LinkSpec
    flows: tuple[FlowSpec, ...]
    meter: MeterSpec
    duration_s: float = 10.0
    wifi: Optional[WifiSpec] = None
    cbr_queue_limit: int = netqos.DEFAULT_CBR_QUEUE_LIMIT


@dataclass
class ScenarioBundle:
    """Loaded, cross-checked scenario ready for the CLI or the service."""

    name: str
    source_path: str
    graph: TopologyGraph
    arrangements: dict[str, ShelfArrangement]
    alarms: list[Alarm]
    points: dict[str, tuple[float, float]]
    frames: dict[str, str]  # synthetic camera frame id -> shelf id
    nav: Optional[NavConfig] = None
    qos: Optional[QosConfig] = None
    _grid3d: Optional[OccupancyGrid3D] = field(default=None, repr=False)
    _grid2d: Optional[Grid2D] = field(default=None, repr=False)

    def grid3d(self) -> OccupancyGrid3D:
        if self.nav is None:
            raise ScenarioInvalidError("scenario has no nav section")
        if self._grid3d is None:
            try:
                with open(self.nav.envmap_path, encoding="utf-8") as fh:
                    raw = json.load(fh)
                self._grid3d = OccupancyGrid3D.from_dict(raw)
            except (OSError, ValueError, KeyError, TypeError) as exc:
                raise ScenarioInvalidError(f"bad environment map: {exc}") from exc
        return self._grid3d

    def nav_grid(self) -> Grid2D:
        if self._grid2d is None:
            cfg = self.nav
            if cfg is None:
                raise ScenarioInvalidError("scenario has no nav section")
            self._grid2d = navmap.project_2d(self.grid3d(), cfg.slab_m[0], cfg.slab_m[1])
        return self._grid2d

    def point_cell(self, name: str) -> tuple[int, int]:
        if name not in self.points:
            raise UnknownPointError(f"unknown point {name!r}")
        x, y = self.points[name]
        return self.nav_grid().cell_of(x, y)

    def frame_arrangement(self, frame: str) -> ShelfArrangement:
        if frame not in self.frames:
            raise ScenarioInvalidError(f"unknown synthetic frame {frame!r}")
        return self.arrangements[self.frames[frame]]

    def to_public_dict(self) -> dict:
        """Client-facing snapshot: topology, alarms, map, named points."""
        out = {
            "name": self.name,
            "topology": self.graph.to_dict(),
            "alarms": [a.to_dict() for a in self.alarms],
            "points": {k: list(v) for k, v in self.points.items()},
            "frames": dict(self.frames),
            "shelves": {
                sid: [[e.slot, e.element_id, e.model] for e in arr.slots]
                for sid, arr in self.arrangements.items()
            },
        }
        if self.nav is not None:
            grid = self.nav_grid()
            out["nav"] = {
                "resolution_m": grid.resolution_m,
                "dims": list(grid.dims),
                "origin_m": list(grid.origin_m),
                "blocked": sorted(list(c) for c in grid.blocked),
                "slab_m": list(self.nav.slab_m),
                "arrow_spacing_m": self.nav.arrow_spacing_m,
                "flag_heights_m": list(self.nav.flag_heights_m),
            }
        return out


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ScenarioInvalidError(msg)


def _parse_qos(raw: dict) -> QosConfig:
    link_raw = raw.get("link", {})
    link = LinkSpec(
        capacity_gbps=float(link_raw.get("capacity_gbps", 100.0)),
        length_km=float(link_raw.get("length_km", 0.0)),
        per_km_delay_us=float(link_raw.get("per_km_delay_us", netqos.DEFAULT_PER_KM_DELAY_US)),
    )
    flows = tuple(
        FlowSpec(
            flow_id=str(f["flow_id"]),
            traffic_class=str(f["class"]),
            offered_gbps=float(f["offered_gbps"]),
            packet_bytes=int(f.get("packet_bytes", 1500)),
        )
        for f in raw.get("flows", [])
    )
    meter_raw = raw.get("meter", {})
    meter = MeterSpec(
        enabled=bool(meter_raw.get("enabled", True)),
        cbr_cap_gbps=float(meter_raw.get("cbr_cap_gbps", 90.0)),
        burst_bytes=float(meter_raw.get("burst_bytes", netqos.DEFAULT_BURST_BYTES)),
    )
    wifi = None
    if raw.get("wifi"):
        wifi_raw = raw["wifi"]
        wifi = WifiSpec(
            rate_gbps=float(wifi_raw.get("rate_gbps", 2.5)),
            latency_ms=float(wifi_raw.get("latency_ms", 2.0)),
        )
    return QosConfig(
        link=link,
        flows=flows,
        meter=meter,
        duration_s=float(raw.get("duration_s", 10.0)),
        wifi=wifi,
        cbr_queue_limit=int(raw.get("cbr_queue_limit", netqos.DEFAULT_CBR_QUEUE_LIMIT)),
    )


def load(path: str) -> ScenarioBundle:
    """Load and validate a scenario file.

    Raises OSError when the file cannot be read and ScenarioInvalidError
    for anything wrong with its content or cross-references.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except ValueError as exc:
            raise ScenarioInvalidError(f"scenario is not valid JSON: {exc}") from exc
    _require(isinstance(raw, dict), "scenario root must be an object")
    _require(raw.get("schema_version") == SCHEMA_VERSION, "unsupported schema_version")

    try:
        inventory = [
            Element(
                id=str(e["id"]),
                kind=ElementKind(e["kind"]),
                model=str(e.get("model", "")),
                node=str(e.get("node", "")),
                shelf=None if e.get("shelf") is None else str(e["shelf"]),
                slot=None if e.get("slot") is None else int(e["slot"]),
            )
            for e in raw.get("elements", [])
        ]
        paths = [
            WavelengthPath(
                id=str(p["id"]),
                route=tuple(str(eid) for eid in p["route"]),
                line_rate_gbps=float(p.get("line_rate_gbps", 0.0)),
            )
            for p in raw.get("paths", [])
        ]
        graph = build_graph(
            inventory=inventory,
            edges=[(str(a), str(b)) for a, b in raw.get("edges", [])],
            paths=paths,
            lengths={str(k): float(v) for k, v in raw.get("fiber_lengths_km", {}).items()},
        )
        shelves = {
            str(sid): [(int(slot), str(eid)) for slot, eid in entries]
            for sid, entries in raw.get("shelves", {}).items()
        }
        arrangements = build_arrangements(graph, shelves)
    except ScenarioInvalidError:
        raise
    except TwinError as exc:
        raise ScenarioInvalidError(f"bad topology: {exc}") from exc
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioInvalidError(f"bad topology section: {exc!r}") from exc

    alarms = alarms_from_dicts(raw.get("alarms", []))
    for alarm in alarms:
        _require(
            alarm.element_id in graph.elements,
            f"alarm references unknown element {alarm.element_id!r}",
        )

    points = {}
    for name, xy in raw.get("points", {}).items():
        _require(
            isinstance(xy, (list, tuple)) and len(xy) == 2,
            f"point {name!r} must be [x, y]",
        )
        points[str(name)] = (float(xy[0]), float(xy[1]))

    frames = {str(k): str(v) for k, v in raw.get("frames", {}).items()}
    for frame, shelf in frames.items():
        _require(shelf in arrangements, f"frame {frame!r} references unknown shelf {shelf!r}")

    nav = None
    if "nav" in raw:
        nav_raw = raw["nav"]
        _require("envmap" in nav_raw, "nav section needs an envmap file reference")
        envmap_path = os.path.join(os.path.dirname(os.path.abspath(path)), nav_raw["envmap"])
        _require(os.path.exists(envmap_path), f"environment map {nav_raw['envmap']!r} not found")
        slab = nav_raw.get("slab_m", [0.1, 1.8])
        _require(
            isinstance(slab, (list, tuple)) and len(slab) == 2 and float(slab[0]) < float(slab[1]),
            "nav.slab_m must be [z_min, z_max] with z_min < z_max",
        )
        heights = nav_raw.get("flag_heights_m", list(navmap.DEFAULT_FLAG_HEIGHTS))
        _require(len(heights) == 2, "nav.flag_heights_m must list two heights")
        nav = NavConfig(
            envmap_path=envmap_path,
            slab_m=(float(slab[0]), float(slab[1])),
            arrow_spacing_m=float(nav_raw.get("arrow_spacing_m", navmap.DEFAULT_ARROW_SPACING_M)),
            flag_heights_m=(float(heights[0]), float(heights[1])),
        )

    qos = None
    if "qos" in raw:
        try:
            qos = _parse_qos(raw["qos"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioInvalidError(f"bad qos section: {exc}") from exc
        for fl in qos.flows:
            _require(
                math.isfinite(fl.offered_gbps) and fl.offered_gbps >= 0,
                f"flow {fl.flow_id!r} offered_gbps must be finite and >= 0",
            )

    return ScenarioBundle(
        name=str(raw.get("name", os.path.basename(path))),
        source_path=os.path.abspath(path),
        graph=graph,
        arrangements=arrangements,
        alarms=alarms,
        points=points,
        frames=frames,
        nav=nav,
        qos=qos,
    )
