#!/usr/bin/env python3
"""Regenerate scenarios/labmap.json, the demo facility voxel map.

A 6 m by 4 m room at 0.1 m resolution: perimeter walls to the ceiling and
two rows of 2 m equipment racks with an aisle gap in the south row. The
output is deterministic; run from the repository root after changing the
geometry below.
"""

import json
import os

RES = 0.1
NX, NY, NZ = 60, 40, 25  # 6.0 x 4.0 x 2.5 m

WALL_Z = NZ
RACK_Z = 20  # racks are 2.0 m tall


def build_occupied():
    occ = set()
    # perimeter walls
    for ix in range(NX):
        for iy in (0, NY - 1):
            for iz in range(WALL_Z):
                occ.add((ix, iy, iz))
    for iy in range(NY):
        for ix in (0, NX - 1):
            for iz in range(WALL_Z):
                occ.add((ix, iy, iz))
    # south rack row (y 1.0..1.4 m) with an aisle gap at x 2.8..3.2 m
    for ix in range(8, 52):
        if 28 <= ix <= 31:
            continue
        for iy in range(10, 14):
            for iz in range(RACK_Z):
                occ.add((ix, iy, iz))
    # north rack row (y 2.6..3.0 m), continuous
    for ix in range(8, 52):
        for iy in range(26, 30):
            for iz in range(RACK_Z):
                occ.add((ix, iy, iz))
    return occ


def main():
    occ = build_occupied()
    out = {
        "resolution_m": RES,
        "dims": [NX, NY, NZ],
        "origin_m": [0.0, 0.0, 0.0],
        "occupied": sorted(list(v) for v in occ),
    }
    path = os.path.join(os.path.dirname(__file__), "..", "scenarios", "labmap.json")
    with open(os.path.abspath(path), "w", encoding="utf-8") as fh:
        json.dump(out, fh)
        fh.write("\n")
    print(f"wrote {os.path.abspath(path)}: {len(occ)} voxels")


if __name__ == "__main__":
    main()
