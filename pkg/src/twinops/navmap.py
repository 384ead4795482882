"""Facility navigation: voxel map ingestion, 2D projection, A-star, arrows.

The 3D occupancy map is projected onto a 2D grid over a height slab, paths
are planned with 8-connected A-star (octile heuristic, no corner cutting),
and the result is decorated with evenly spaced guidance arrows plus a
destination flag whose height encodes the target shelf level.

Everything here is pure over immutable grids; queries may run in parallel.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from twinops import kernels
from twinops.errors import (
    BlockedEndpointError,
    EmptySlabError,
    InvalidShelfLevelError,
    NoPathError,
    OutOfBoundsError,
)

SQRT2 = math.sqrt(2.0)

Cell = tuple[int, int]

#: Default flag heights (meters) for shelf levels 0 (lower) and 1 (upper).
DEFAULT_FLAG_HEIGHTS = (0.6, 1.5)

#: Default spacing between guidance arrows along the path, meters.
DEFAULT_ARROW_SPACING_M = 1.0


@dataclass(frozen=True)
class OccupancyGrid3D:
    """Voxel occupancy map of the facility."""

    resolution_m: float
    dims: tuple[int, int, int]
    occupied: frozenset[tuple[int, int, int]]
    origin_m: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.resolution_m <= 0:
            raise ValueError("resolution_m must be > 0")
        nx, ny, nz = self.dims
        if nx <= 0 or ny <= 0 or nz <= 0:
            raise ValueError("dims must be positive")
        for ix, iy, iz in self.occupied:
            if not (0 <= ix < nx and 0 <= iy < ny and 0 <= iz < nz):
                raise ValueError(f"occupied voxel {(ix, iy, iz)} outside dims {self.dims}")

    @classmethod
    def from_dict(cls, raw: dict) -> "OccupancyGrid3D":
        return cls(
            resolution_m=float(raw["resolution_m"]),
            dims=tuple(int(v) for v in raw["dims"]),
            occupied=frozenset(tuple(int(v) for v in vox) for vox in raw["occupied"]),
            origin_m=tuple(float(v) for v in raw.get("origin_m", (0.0, 0.0, 0.0))),
        )

    def to_dict(self) -> dict:
        return {
            "resolution_m": self.resolution_m,
            "dims": list(self.dims),
            "origin_m": list(self.origin_m),
            "occupied": sorted(list(v) for v in self.occupied),
        }


@dataclass(frozen=True)
class Grid2D:
    """Top-view navigation grid; blocked cells are obstacles."""

    resolution_m: float
    dims: tuple[int, int]
    blocked: frozenset[Cell]
    origin_m: tuple[float, float] = (0.0, 0.0)

    def in_bounds(self, cell: Cell) -> bool:
        ix, iy = cell
        return 0 <= ix < self.dims[0] and 0 <= iy < self.dims[1]

    def is_blocked(self, cell: Cell) -> bool:
        return cell in self.blocked

    def cell_center_m(self, cell: Cell) -> tuple[float, float]:
        ix, iy = cell
        return (
            self.origin_m[0] + (ix + 0.5) * self.resolution_m,
            self.origin_m[1] + (iy + 0.5) * self.resolution_m,
        )

    def cell_of(self, x_m: float, y_m: float) -> Cell:
        ix = int(math.floor((x_m - self.origin_m[0]) / self.resolution_m))
        iy = int(math.floor((y_m - self.origin_m[1]) / self.resolution_m))
        return (ix, iy)

    def blocked_array(self) -> np.ndarray:
        """(ny, nx) uint8 obstacle mask for the search kernel."""
        nx, ny = self.dims
        arr = np.zeros((ny, nx), dtype=np.uint8)
        for ix, iy in self.blocked:
            arr[iy, ix] = 1
        return arr


@dataclass(frozen=True)
class Arrow:
    position_m: tuple[float, float]
    heading_rad: float


@dataclass(frozen=True)
class Flag:
    position_m: tuple[float, float]
    height_m: float


@dataclass(frozen=True)
class NavPath:
    """Planned route plus its guidance decorations."""

    cells: tuple[Cell, ...]
    arrows: tuple[Arrow, ...]
    flag: Flag
    cost: float

    def to_dict(self) -> dict:
        return {
            "cells": [list(c) for c in self.cells],
            "arrows": [
                {"position_m": list(a.position_m), "heading_rad": a.heading_rad}
                for a in self.arrows
            ],
            "flag": {
                "position_m": list(self.flag.position_m),
                "height_m": self.flag.height_m,
            },
            "cost": self.cost,
        }


def project_2d(grid: OccupancyGrid3D, z_min_m: float, z_max_m: float) -> Grid2D:
    """Project voxels whose z-extent intersects [z_min_m, z_max_m] onto 2D.

    A cell blocks iff any occupied voxel in the slab covers it. Raises
    EmptySlabError when the slab misses the grid's z-range entirely
    (asking about space the map does not model).
    """
    if not z_min_m < z_max_m:
        raise ValueError("z_min_m must be < z_max_m")
    res = grid.resolution_m
    oz = grid.origin_m[2]
    nz = grid.dims[2]

    def layer_in_slab(iz: int) -> bool:
        lo = oz + iz * res
        hi = oz + (iz + 1) * res
        return lo <= z_max_m and hi > z_min_m

    if not (oz <= z_max_m and oz + nz * res > z_min_m):
        raise EmptySlabError(
            f"slab [{z_min_m}, {z_max_m}] m lies outside the mapped z-range"
        )

    blocked = frozenset(
        (ix, iy) for (ix, iy, iz) in grid.occupied if layer_in_slab(iz)
    )
    return Grid2D(
        resolution_m=res,
        dims=(grid.dims[0], grid.dims[1]),
        blocked=blocked,
        origin_m=(grid.origin_m[0], grid.origin_m[1]),
    )


def _check_endpoint(grid: Grid2D, cell: Cell, name: str) -> None:
    if not grid.in_bounds(cell):
        raise OutOfBoundsError(f"{name} cell {cell} outside grid {grid.dims}")
    if grid.is_blocked(cell):
        raise BlockedEndpointError(f"{name} cell {cell} is blocked")


def astar(grid: Grid2D, start: Cell, goal: Cell) -> list[Cell]:
    """Minimum-cost 8-connected path from start to goal.

    Cost is 1 per axial step and sqrt(2) per diagonal; corner-cutting
    diagonals are forbidden. Deterministic: ties resolve on lower f, then
    lower h, then row-major cell order.
    """
    _check_endpoint(grid, start, "start")
    _check_endpoint(grid, goal, "goal")
    cells, _cost = kernels.astar_search(
        grid.blocked_array(), start[0], start[1], goal[0], goal[1]
    )
    if cells is None:
        raise NoPathError(f"no path from {start} to {goal}")
    return [tuple(c) for c in cells]


def path_cost(cells: Sequence[Cell]) -> float:
    """Cost of an 8-connected path, accumulated in path order."""
    cost = 0.0
    for (ax, ay), (bx, by) in zip(cells, cells[1:]):
        cost += SQRT2 if (ax != bx and ay != by) else 1.0
    return cost


def decimate(
    path: Sequence[Cell], grid: Grid2D, spacing_m: float = DEFAULT_ARROW_SPACING_M
) -> list[Arrow]:
    """Guidance arrows at arc-length multiples of ``spacing_m`` along the path.

    Each arrow lies on the cell-center polyline and points along the
    segment it falls on (forward-looking at vertices). The start always
    carries an arrow; a single-cell path yields one arrow with heading 0.
    """
    if not path:
        raise ValueError("path must be non-empty")
    if spacing_m <= 0:
        raise ValueError("spacing_m must be > 0")
    points = [grid.cell_center_m(c) for c in path]
    if len(points) == 1:
        return [Arrow(position_m=points[0], heading_rad=0.0)]

    cum = [0.0]
    headings = []
    for (ax, ay), (bx, by) in zip(points, points[1:]):
        seg = math.hypot(bx - ax, by - ay)
        cum.append(cum[-1] + seg)
        headings.append(math.atan2(by - ay, bx - ax))
    total = cum[-1]

    arrows = []
    n_arrows = int(math.floor(total / spacing_m)) + 1
    for k in range(n_arrows):
        s = min(k * spacing_m, total)
        # segment containing s; at interior vertices take the next segment
        j = bisect_right(cum, s) - 1
        j = min(j, len(headings) - 1)
        ax, ay = points[j]
        bx, by = points[j + 1]
        seg_len = cum[j + 1] - cum[j]
        frac = (s - cum[j]) / seg_len if seg_len > 0 else 0.0
        arrows.append(
            Arrow(
                position_m=(ax + frac * (bx - ax), ay + frac * (by - ay)),
                heading_rad=headings[j],
            )
        )
    return arrows


def flag_for(
    goal: Cell,
    grid: Grid2D,
    shelf_level: int,
    heights_m: Sequence[float] = DEFAULT_FLAG_HEIGHTS,
) -> Flag:
    """Destination flag at the goal; its height encodes the shelf level.

    Racks carry two shelves, so only levels 0 (lower) and 1 (upper) exist.
    """
    if len(heights_m) != 2:
        raise ValueError("heights_m must provide exactly two levels")
    if shelf_level not in (0, 1):
        raise InvalidShelfLevelError(
            f"shelf level must be 0 or 1, got {shelf_level}"
        )
    return Flag(position_m=grid.cell_center_m(goal), height_m=float(heights_m[shelf_level]))


def plan(
    grid: Grid2D,
    start: Cell,
    goal: Cell,
    shelf_level: int = 0,
    spacing_m: float = DEFAULT_ARROW_SPACING_M,
    flag_heights_m: Sequence[float] = DEFAULT_FLAG_HEIGHTS,
) -> NavPath:
    """Full navigation product: path, arrows, and flag."""
    cells = astar(grid, start, goal)
    return NavPath(
        cells=tuple(cells),
        arrows=tuple(decimate(cells, grid, spacing_m)),
        flag=flag_for(goal, grid, shelf_level, flag_heights_m),
        cost=path_cost(cells),
    )
