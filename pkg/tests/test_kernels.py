"""Cross-checks between the compiled kernels and the pure-Python fallback.

Every case asserts bit-identical outputs, not approximate agreement: the two
implementations are required to perform the same double arithmetic in the
same order.
"""

from __future__ import annotations

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from twinops import _core_py, kernels

compiled = pytest.importorskip("twinops._core", reason="compiled extension not built")


def random_blocked(rng: np.random.Generator, nx: int, ny: int, fill: float) -> np.ndarray:
    grid = (rng.random((ny, nx)) < fill).astype(np.uint8)
    grid[0, 0] = 0
    grid[ny - 1, nx - 1] = 0
    return grid


class TestDispatch:
    def test_compiled_selected_by_default(self):
        if os.environ.get("TWINOPS_PURE_PYTHON"):
            pytest.skip("pure fallback forced via environment")
        assert kernels.COMPILED
        assert kernels.KERNEL_NAME == "compiled"

    def test_env_forces_pure(self):
        code = (
            "import os; os.environ['TWINOPS_PURE_PYTHON'] = '1'; "
            "from twinops import kernels; "
            "assert not kernels.COMPILED; print(kernels.KERNEL_NAME)"
        )
        out = subprocess.run(
            [sys.executable, "-c", code], capture_output=True, text=True, check=True
        )
        assert out.stdout.strip() == "pure-python"


class TestAstarParity:
    def test_random_grids_identical(self):
        rng = np.random.default_rng(11)
        solvable = 0
        blocked_cases = 0
        for _ in range(40):
            nx = int(rng.integers(4, 28))
            ny = int(rng.integers(4, 28))
            grid = random_blocked(rng, nx, ny, float(rng.uniform(0.1, 0.45)))
            c_cells, c_cost = compiled.astar_search(grid, 0, 0, nx - 1, ny - 1)
            p_cells, p_cost = _core_py.astar_search(grid, 0, 0, nx - 1, ny - 1)
            if c_cells is None:
                assert p_cells is None
                assert math.isinf(c_cost) and math.isinf(p_cost)
                blocked_cases += 1
            else:
                assert list(map(tuple, c_cells)) == list(map(tuple, p_cells))
                assert c_cost == p_cost  # bit-exact, no tolerance
                solvable += 1
        assert solvable > 0 and blocked_cases > 0

    def test_empty_grid_cost_bits(self):
        grid = np.zeros((12, 12), dtype=np.uint8)
        c_cells, c_cost = compiled.astar_search(grid, 0, 0, 11, 11)
        p_cells, p_cost = _core_py.astar_search(grid, 0, 0, 11, 11)
        # cost accumulates one step at a time, so the oracle must too
        expect = 0.0
        for _ in range(11):
            expect += math.sqrt(2.0)
        assert c_cost == p_cost == expect
        assert list(map(tuple, c_cells)) == list(map(tuple, p_cells))


def _qos_args(meter_enabled: int) -> tuple:
    rng = np.random.default_rng(5)
    n = 400
    times = np.sort(rng.uniform(0.0, 0.5, n))
    flow = rng.integers(0, 2, n).astype(np.int32)
    bits = np.full(n, 1500 * 8, dtype=np.float64)
    extra = np.zeros(n, dtype=np.float64)
    return (
        0.5,                       # duration_s
        1e9,                       # capacity_bps
        times,
        flow,
        bits,
        extra,
        2,                         # n_ar_flows
        np.array([12e-6, 20e-6]),  # cbr periods
        np.array([12000.0, 12000.0]),
        np.array([1500.0, 1500.0]),
        meter_enabled,
        50e6,                      # meter rate bytes/s
        150_000.0,                 # depth
        64,                        # queue limit
        0.43e-3,                   # prop delay
    )


class TestQosParity:
    @pytest.mark.parametrize("meter_enabled", [0, 1])
    def test_event_loop_identical(self, meter_enabled):
        a = compiled.qos_run(*_qos_args(meter_enabled))
        b = _core_py.qos_run(*_qos_args(meter_enabled))
        assert a.keys() == b.keys()
        for key in a:
            va, vb = a[key], b[key]
            if isinstance(va, np.ndarray):
                assert np.array_equal(va, vb), key
            else:
                assert va == vb, key

    def test_rtt_arrays_bitwise(self):
        a = compiled.qos_run(*_qos_args(1))
        b = _core_py.qos_run(*_qos_args(1))
        assert a["ar_rtt_s"].tobytes() == b["ar_rtt_s"].tobytes()
