"""Independent reference implementations used to check the real ones.

Everything here is deliberately written a different way from the library
code (plain heaps, brute-force set unions, direct formulas) so the tests
compare two independent derivations rather than the code against itself.
"""

from __future__ import annotations

import heapq
import math
import random

from twinops.topology import (
    Element,
    ElementKind,
    TopologyGraph,
    WavelengthPath,
    build_graph,
)

SQRT2 = math.sqrt(2.0)


def dijkstra_grid_cost(
    blocked: set[tuple[int, int]],
    nx: int,
    ny: int,
    start: tuple[int, int],
    goal: tuple[int, int],
) -> float | None:
    """Uniform-cost search on the 8-connected grid; None when unreachable.

    Same movement rules as the planner (unit axial cost, sqrt(2) diagonal,
    no corner cutting) but no heuristic and no shared code.
    """
    if start in blocked or goal in blocked:
        return None
    dist = {start: 0.0}
    heap = [(0.0, start)]
    while heap:
        d, cell = heapq.heappop(heap)
        if cell == goal:
            return d
        if d > dist.get(cell, math.inf):
            continue
        cx, cy = cell
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                if dx == 0 and dy == 0:
                    continue
                nxt = (cx + dx, cy + dy)
                if not (0 <= nxt[0] < nx and 0 <= nxt[1] < ny):
                    continue
                if nxt in blocked:
                    continue
                if dx != 0 and dy != 0:
                    # both orthogonal neighbors must be free to cut the corner
                    if (cx + dx, cy) in blocked or (cx, cy + dy) in blocked:
                        continue
                step = SQRT2 if dx != 0 and dy != 0 else 1.0
                nd = d + step
                if nd < dist.get(nxt, math.inf):
                    dist[nxt] = nd
                    heapq.heappush(heap, (nd, nxt))
    return None


def brute_projection(
    occupied: set[tuple[int, int, int]],
    resolution_m: float,
    origin_z: float,
    z_min: float,
    z_max: float,
) -> set[tuple[int, int]]:
    """Blocked 2D cells by directly testing every voxel's world-z interval."""
    blocked = set()
    for ix, iy, iz in occupied:
        lo = origin_z + iz * resolution_m
        hi = origin_z + (iz + 1) * resolution_m
        if lo <= z_max and hi > z_min:
            blocked.add((ix, iy))
    return blocked


def lcs_table_length(a: list[str], b: list[str]) -> int:
    """Textbook forward-DP longest common subsequence length."""
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            if a[i - 1] == b[j - 1]:
                dp[i][j] = dp[i - 1][j - 1] + 1
            else:
                dp[i][j] = max(dp[i - 1][j], dp[i][j - 1])
    return dp[n][m]


def md1_wait_s(arrival_rate_hz: float, service_s: float) -> float:
    """Mean queueing wait for Poisson arrivals and fixed service time."""
    rho = arrival_rate_hz * service_s
    return rho * service_s / (2.0 * (1.0 - rho))


_CARD_KINDS = (
    ElementKind.OT,
    ElementKind.LA,
    ElementKind.WSS,
    ElementKind.AA,
    ElementKind.MCS,
)

_MODEL_POOL = (
    "D23X600",
    "D5X500Q",
    "ASWG",
    "EGAIN2",
    "WR8-88A",
    "WR20TF",
    "AM2032A",
    "AAR8A",
    "MCS16",
    "MCS8-4",
    "OSCT",
)


def random_topology(
    rng: random.Random, max_elements: int = 50, max_paths: int = 4
) -> TopologyGraph:
    """Random multi-path inventory within the given size bounds.

    Routes are generated card-by-card with occasional fiber spans between
    them; later paths may reuse a middle element of an earlier path so the
    downstream cones overlap, which is the interesting case for ranking.
    """
    n_paths = rng.randint(1, max_paths)
    elements: dict[str, Element] = {}
    routes: list[list[str]] = []
    lengths: dict[str, float] = {}
    counter = 0

    def fresh(kind: ElementKind) -> str:
        nonlocal counter
        counter += 1
        eid = f"N{counter}/{kind.value}{counter}"
        elements[eid] = Element(
            id=eid, kind=kind, model=rng.choice(_MODEL_POOL), node=f"N{counter}"
        )
        if kind is ElementKind.FIBER_SPAN:
            lengths[eid] = round(rng.uniform(1.0, 120.0), 1)
        return eid

    for p in range(n_paths):
        budget = max_elements - len(elements)
        if budget < 4:
            break
        length = rng.randint(4, min(10, budget))
        route = [fresh(ElementKind.OT)]
        while len(route) < length - 1:
            if rng.random() < 0.25:
                route.append(fresh(ElementKind.FIBER_SPAN))
            elif routes and rng.random() < 0.2:
                donor = rng.choice(routes)
                candidate = rng.choice(donor[1:-1])
                if candidate not in route:
                    route.append(candidate)
                    continue
                route.append(fresh(rng.choice(_CARD_KINDS[1:])))
            else:
                route.append(fresh(rng.choice(_CARD_KINDS[1:])))
        route.append(fresh(ElementKind.OT))
        routes.append(route)

    edges = set()
    for route in routes:
        edges.update(zip(route, route[1:]))
    paths = [
        WavelengthPath(id=f"WL{i + 1}", route=tuple(r), line_rate_gbps=100.0)
        for i, r in enumerate(routes)
    ]
    return build_graph(elements.values(), edges, paths, lengths)


def on_path_elements(graph: TopologyGraph) -> list[str]:
    ids = []
    for eid in graph.elements:
        if graph.paths_through(eid):
            ids.append(eid)
    return ids
