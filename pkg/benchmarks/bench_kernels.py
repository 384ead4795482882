"""Compare the compiled kernels against the pure-Python fallback.

Runs the same grid search and packet-simulation workloads through both
implementations, checks the outputs agree, and prints the timings.

    python3 benchmarks/bench_kernels.py [--repeats N] [--grid N] [--sim-seconds S]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from twinops import _core_py

try:
    from twinops import _core
except ImportError:
    _core = None


def best_of(fn, repeats: int) -> tuple[float, object]:
    best = float("inf")
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def astar_workload(n: int):
    """Solvable n x n occupancy grid at 25% blockage, corner-to-corner query."""
    rng = random.Random(11)
    pool = [(x, y) for x in range(n) for y in range(n) if (x, y) not in ((0, 0), (n - 1, n - 1))]
    while True:
        grid = np.zeros((n, n), dtype=np.uint8)
        for x, y in rng.sample(pool, round(0.25 * n * n)):
            grid[x, y] = 1
        if _core_py.astar_search(grid, 0, 0, n - 1, n - 1) is not None:
            return grid, n


def qos_args(sim_seconds: float) -> tuple:
    rng = np.random.default_rng(7)
    n_ar = int(20_000 * sim_seconds)
    times = np.sort(rng.uniform(0.0, sim_seconds, n_ar))
    flow = rng.integers(0, 2, n_ar).astype(np.int32)
    bits = np.full(n_ar, 1500 * 8, dtype=np.float64)
    extra = np.zeros(n_ar, dtype=np.float64)
    return (
        sim_seconds,
        1e9,                        # 1 Gb/s link
        times,
        flow,
        bits,
        extra,
        2,
        np.array([12e-6, 20e-6]),   # CBR periods: ~133k packets per simulated second
        np.array([12000.0, 12000.0]),
        np.array([1500.0, 1500.0]),
        1,
        50e6,
        150_000.0,
        64,
        0.43e-3,
    )


def check_equal(label: str, a, b) -> None:
    if isinstance(a, dict):
        assert a.keys() == b.keys(), label
        for key in a:
            check_equal(f"{label}.{key}", a[key], b[key])
    elif isinstance(a, np.ndarray):
        assert np.array_equal(a, b), label
    else:
        assert a == b, label


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--grid", type=int, default=192, help="grid side length")
    parser.add_argument("--sim-seconds", type=float, default=2.0, help="simulated seconds of traffic")
    args = parser.parse_args()

    impls = [("pure-python", _core_py)]
    if _core is not None:
        impls.insert(0, ("compiled", _core))
    else:
        print("compiled extension not importable; timing the fallback only\n")

    grid, n = astar_workload(args.grid)
    qargs = qos_args(args.sim_seconds)
    rows = []
    results: dict[str, dict[str, object]] = {}
    for name, mod in impls:
        t_astar, r_astar = best_of(lambda: mod.astar_search(grid, 0, 0, n - 1, n - 1), args.repeats)
        t_qos, r_qos = best_of(lambda: mod.qos_run(*qargs), args.repeats)
        results[name] = {"astar": r_astar, "qos": r_qos}
        rows.append((name, "astar_search", f"{n}x{n}, 25% blocked", t_astar))
        rows.append((name, "qos_run", f"{args.sim_seconds:g} s simulated", t_qos))

    if len(impls) == 2:
        check_equal("astar", results["compiled"]["astar"], results["pure-python"]["astar"])
        check_equal("qos", results["compiled"]["qos"], results["pure-python"]["qos"])

    width = max(len(r[2]) for r in rows)
    print(f"{'kernel':<13} {'workload':<13} {'size':<{width}}  best of {args.repeats}")
    for name, workload, size, t in rows:
        print(f"{name:<13} {workload:<13} {size:<{width}}  {t * 1e3:10.2f} ms")

    if len(impls) == 2:
        for workload in ("astar_search", "qos_run"):
            t_c = next(t for nm, w, _, t in rows if nm == "compiled" and w == workload)
            t_p = next(t for nm, w, _, t in rows if nm == "pure-python" and w == workload)
            print(f"{workload}: compiled is {t_p / t_c:.1f}x faster (outputs identical)")


if __name__ == "__main__":
    main()
