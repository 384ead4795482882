"""Command-line entry point: localization, navigation, card overlays, QoS.

One binary, one shared scenario loader. Exit codes are a stable contract:
0 success, 2 scenario or configuration error, 3 no domain solution
(for example an unreachable goal), 4 I/O error. ``--deterministic`` strips
wall-clock fields so golden outputs diff cleanly.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import math
import os
import sys
import time
from typing import Optional

from twinops import cardid, faultloc, kernels, navmap, netqos, scenario
from twinops.errors import (
    BlockedEndpointError,
    DetectorUnavailableError,
    EmptyAlarmsError,
    EmptySlabError,
    InvalidConfigError,
    InvalidShelfLevelError,
    NoDetectionsError,
    NoPathError,
    NotOnAnyPathError,
    OutOfBoundsError,
    ScenarioInvalidError,
    TwinError,
    UnknownPointError,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_SOLUTION = 3
EXIT_IO = 4

_CONFIG_ERRORS = (
    ScenarioInvalidError,
    InvalidConfigError,
    EmptyAlarmsError,
    NotOnAnyPathError,
    UnknownPointError,
    InvalidShelfLevelError,
    EmptySlabError,
    DetectorUnavailableError,
)
_NO_SOLUTION_ERRORS = (
    NoPathError,
    BlockedEndpointError,
    OutOfBoundsError,
    NoDetectionsError,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twinops",
        description="Optical-network digital twin: localize faults, navigate the "
        "facility, identify cards, simulate link QoS, or serve it all.",
    )
    parser.add_argument(
        "--scenario",
        default=None,
        help="scenario JSON file (falls back to $TWINOPS_SCENARIO)",
    )
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        help="omit wall-clock fields so output is byte-stable",
    )
    parser.add_argument(
        "--output", choices=("json", "text"), default="text", help="report format"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_loc = sub.add_parser("localize", help="rank candidate root causes for the alarm set")
    p_loc.add_argument("--algo", choices=("coverage", "mp"), default="coverage")
    p_loc.add_argument("--iters", type=int, default=3, help="message-passing rounds")

    p_nav = sub.add_parser("navigate", help="plan a route between named points")
    p_nav.add_argument("--from", dest="src", required=True, help="point name or 'x,y' meters")
    p_nav.add_argument("--to", dest="dst", required=True, help="point name or 'x,y' meters")
    p_nav.add_argument("--shelf-level", type=int, default=0, choices=(0, 1))
    p_nav.add_argument("--spacing", type=float, default=None, help="arrow spacing, meters")
    p_nav.add_argument("--ascii", action="store_true", help="render the grid and route")

    p_card = sub.add_parser("card-id", help="identify cards on a synthetic camera frame")
    p_card.add_argument("--frame", required=True, help="synthetic frame id from the scenario")
    p_card.add_argument("--sigma", type=float, default=0.0, help="detector bbox jitter")

    p_qos = sub.add_parser("simulate-qos", help="run the shared-link packet simulation")
    p_qos.add_argument("--meter", choices=("on", "off"), default=None)
    p_qos.add_argument("--duration", type=float, default=None, help="simulated seconds")
    p_qos.add_argument("--histogram", action="store_true", help="print an RTT histogram")
    p_qos.add_argument("--bin-ms", type=float, default=1.0, help="histogram bin width")

    p_srv = sub.add_parser("serve", help="run the edge service")
    p_srv.add_argument("--listen", default="127.0.0.1:8440", help="TCP host:port")
    p_srv.add_argument("--ws-port", type=int, default=8441, help="WebSocket/HTTP port")

    return parser


def _emit(args, obj: dict, text_lines) -> None:
    if args.output == "json":
        print(json.dumps(obj, sort_keys=True))
    else:
        for line in text_lines:
            print(line)


def _elapsed_field(args, obj: dict, t0: float) -> None:
    if not args.deterministic:
        obj["elapsed_ms"] = (time.perf_counter() - t0) * 1e3


def run_localize(args, bundle: scenario.ScenarioBundle) -> int:
    t0 = time.perf_counter()
    if args.algo == "mp":
        result = faultloc.localize_mp(bundle.graph, bundle.alarms, iterations=args.iters)
    else:
        result = faultloc.localize(bundle.graph, bundle.alarms)
    obj = result.to_dict()
    obj["algo"] = args.algo
    _elapsed_field(args, obj, t0)
    lines = [f"root cause: {result.root_cause_id}  (algo={args.algo})", "ranking:"]
    for eid, score in result.ranking:
        lines.append(f"  {eid:<14} {score:.4f}")
    lines.append("explained alarms:")
    for idx, eid in sorted(result.explained.items()):
        lines.append(f"  alarm[{idx}] <- {eid}")
    _emit(args, obj, lines)
    return EXIT_OK


def _parse_endpoint(bundle: scenario.ScenarioBundle, spec: str) -> tuple[int, int]:
    if "," in spec:
        try:
            x, y = (float(v) for v in spec.split(",", 1))
        except ValueError:
            raise UnknownPointError(f"bad coordinate {spec!r}, expected 'x,y'") from None
        return bundle.nav_grid().cell_of(x, y)
    return bundle.point_cell(spec)


def _ascii_map(grid, cells, start, goal) -> list[str]:
    on_path = set(cells)
    lines = []
    for iy in range(grid.dims[1]):
        row = []
        for ix in range(grid.dims[0]):
            cell = (ix, iy)
            if cell == start:
                row.append("S")
            elif cell == goal:
                row.append("G")
            elif cell in on_path:
                row.append("*")
            elif grid.is_blocked(cell):
                row.append("#")
            else:
                row.append(".")
        lines.append("".join(row))
    return lines


def run_navigate(args, bundle: scenario.ScenarioBundle) -> int:
    t0 = time.perf_counter()
    grid = bundle.nav_grid()
    start = _parse_endpoint(bundle, args.src)
    goal = _parse_endpoint(bundle, args.dst)
    cfg = bundle.nav
    spacing = args.spacing if args.spacing is not None else cfg.arrow_spacing_m
    path = navmap.plan(
        grid,
        start,
        goal,
        shelf_level=args.shelf_level,
        spacing_m=spacing,
        flag_heights_m=cfg.flag_heights_m,
    )
    obj = path.to_dict()
    obj["from"] = list(start)
    obj["to"] = list(goal)
    _elapsed_field(args, obj, t0)
    lines = [
        f"route {args.src} -> {args.dst}: {len(path.cells)} cells, cost {path.cost:.3f}",
        f"flag at ({path.flag.position_m[0]:.2f}, {path.flag.position_m[1]:.2f}) m, "
        f"height {path.flag.height_m:.1f} m",
        f"arrows ({len(path.arrows)}):",
    ]
    for arrow in path.arrows:
        deg = math.degrees(arrow.heading_rad)
        lines.append(
            f"  ({arrow.position_m[0]:6.2f}, {arrow.position_m[1]:6.2f}) m  "
            f"heading {deg:7.2f} deg"
        )
    if args.ascii:
        lines.extend(_ascii_map(grid, path.cells, start, goal))
        obj["ascii"] = _ascii_map(grid, path.cells, start, goal)
    _emit(args, obj, lines)
    return EXIT_OK


def run_card_id(args, bundle: scenario.ScenarioBundle) -> int:
    t0 = time.perf_counter()
    arrangement = bundle.frame_arrangement(args.frame)
    detector = cardid.SyntheticDetector(
        arrangements={args.frame: arrangement}, sigma=args.sigma, seed=args.seed
    )
    detections = detector.detect(args.frame)
    assignment = cardid.match_slots(detections, arrangement)
    localization = None
    if bundle.alarms:
        localization = faultloc.localize(bundle.graph, bundle.alarms)
    items = cardid.overlay(detections, assignment, arrangement, localization, bundle.alarms)
    obj = {
        "frame": args.frame,
        "shelf": arrangement.shelf_id,
        "items": [item.to_dict() for item in items],
        "root_cause_visible": cardid.root_cause_visible(items),
        "unmatched_detections": list(assignment.unmatched_detections),
        "unmatched_slots": list(assignment.unmatched_slots),
    }
    _elapsed_field(args, obj, t0)
    lines = [f"frame {args.frame} (shelf {arrangement.shelf_id}):"]
    for item in items:
        lines.append(
            f"  slot {item.slot}: {item.label:<10} {item.element_id:<14} "
            f"conf {item.confidence:.2f}  {item.color.value}"
        )
    lines.append(f"root cause visible: {obj['root_cause_visible']}")
    _emit(args, obj, lines)
    return EXIT_OK


def run_simulate_qos(args, bundle: scenario.ScenarioBundle) -> int:
    cfg = bundle.qos
    if cfg is None:
        raise ScenarioInvalidError("scenario has no qos section")
    meter = cfg.meter
    if args.meter is not None:
        meter = netqos.MeterSpec(
            enabled=(args.meter == "on"),
            cbr_cap_gbps=cfg.meter.cbr_cap_gbps,
            burst_bytes=cfg.meter.burst_bytes,
        )
    duration = args.duration if args.duration is not None else cfg.duration_s
    t0 = time.perf_counter()
    report = netqos.simulate(
        cfg.link,
        cfg.flows,
        meter,
        duration,
        seed=args.seed,
        wifi=cfg.wifi,
        cbr_queue_limit=cfg.cbr_queue_limit,
    )
    obj = report.to_dict()
    obj["kernel"] = kernels.KERNEL_NAME
    _elapsed_field(args, obj, t0)
    lines = [
        f"link {report.capacity_gbps:g} Gb/s, duration {report.duration_s:g} s, "
        f"meter {'on' if report.meter_enabled else 'off'}, kernel {kernels.KERNEL_NAME}",
        f"propagation {report.propagation_ms:.3f} ms one-way, link busy "
        f"{report.busy_fraction * 100:.1f}%",
    ]
    for st in report.flows:
        extra = ""
        if st.traffic_class == netqos.AR and st.mean_rtt_ms is not None:
            extra = f"  mean RTT {st.mean_rtt_ms:.3f} ms"
        drops = st.meter_drops + st.tail_drops
        lines.append(
            f"  {st.flow_id:<8} {st.traffic_class:<3} offered {st.offered_gbps:8.3f}  "
            f"achieved {st.achieved_gbps:8.3f} Gb/s  drops {drops}{extra}"
        )
    if args.histogram and report.ar_rtt_ms.size:
        counts, edges = report.rtt_histogram(args.bin_ms)
        obj["rtt_histogram"] = {
            "bin_ms": args.bin_ms,
            "counts": counts.tolist(),
            "edges_ms": edges.tolist(),
        }
        lines.append(f"AR RTT histogram (bin {args.bin_ms:g} ms):")
        for i, count in enumerate(counts):
            if count:
                lines.append(f"  [{edges[i]:7.2f}, {edges[i + 1]:7.2f}) ms  {count}")
    _emit(args, obj, lines)
    return EXIT_OK


def run_serve(args, bundle: scenario.ScenarioBundle) -> int:
    from twinops.edged.service import EdgeService

    host, _, port = args.listen.rpartition(":")
    if not host or not port.isdigit():
        raise InvalidConfigError(f"--listen must be host:port, got {args.listen!r}")

    async def _serve() -> None:
        service = EdgeService(
            bundle, host=host, tcp_port=int(port), ws_port=args.ws_port, seed=args.seed
        )
        await service.start()
        print(
            f"twinops edge service: tcp {host}:{service.tcp_port}, "
            f"ws {service.ws_url}, scenario {bundle.name}",
            flush=True,
        )
        try:
            await asyncio.Event().wait()
        finally:
            await service.stop()

    try:
        asyncio.run(_serve())
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    scenario_path = args.scenario or os.environ.get("TWINOPS_SCENARIO")
    if not scenario_path:
        print("error: no scenario given (--scenario or $TWINOPS_SCENARIO)", file=sys.stderr)
        return EXIT_CONFIG
    try:
        bundle = scenario.load(scenario_path)
        handler = {
            "localize": run_localize,
            "navigate": run_navigate,
            "card-id": run_card_id,
            "simulate-qos": run_simulate_qos,
            "serve": run_serve,
        }[args.command]
        return handler(args, bundle)
    except _CONFIG_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NO_SOLUTION_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TwinError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
