"""Pure-Python kernels: grid A-star and the QoS packet event loop.

This module mirrors the compiled extension ``twinops._core`` operation for
operation. Both implementations perform the same IEEE-754 double arithmetic
in the same order, so a given input produces bit-identical results on
either; :mod:`twinops.kernels` picks whichever is importable.
"""

from __future__ import annotations

import math
from heapq import heappop, heappush

import numpy as np

SQRT2 = math.sqrt(2.0)
_INF = math.inf

# Neighbor offsets: 4 axial then 4 diagonal. Order matters only for heap
# insertion sequencing and matches the compiled kernel.
_STEPS = (
    (1, 0, 1.0),
    (-1, 0, 1.0),
    (0, 1, 1.0),
    (0, -1, 1.0),
    (1, 1, SQRT2),
    (1, -1, SQRT2),
    (-1, 1, SQRT2),
    (-1, -1, SQRT2),
)


def _octile(ix: int, iy: int, gx: int, gy: int) -> float:
    dx = ix - gx
    if dx < 0:
        dx = -dx
    dy = iy - gy
    if dy < 0:
        dy = -dy
    if dx < dy:
        dmin, dmax = dx, dy
    else:
        dmin, dmax = dy, dx
    return float(dmax - dmin) + SQRT2 * float(dmin)


def astar_search(blocked, sx: int, sy: int, gx: int, gy: int):
    """Minimum-cost 8-connected path on a blocked-cell grid.

    ``blocked`` is a (ny, nx) uint8 array; nonzero cells are obstacles.
    Costs are 1 per axial step and sqrt(2) per diagonal; diagonals may not
    cut corners. Ties resolve on (f, h, row-major index), which pins the
    expansion order and therefore the returned path.

    Returns ``(cells, cost)`` with cells as a list of (ix, iy), or
    ``(None, inf)`` when the goal is unreachable. Endpoint validation is
    the caller's job.
    """
    grid = np.ascontiguousarray(blocked, dtype=np.uint8)
    ny, nx = grid.shape
    flat = grid.reshape(-1).tolist()
    size = nx * ny

    start = sy * nx + sx
    goal = gy * nx + gx

    g = [_INF] * size
    came = [-1] * size
    closed = bytearray(size)

    g[start] = 0.0
    h0 = _octile(sx, sy, gx, gy)
    heap = [(h0, h0, start)]

    while heap:
        f, h, idx = heappop(heap)
        if closed[idx]:
            continue
        closed[idx] = 1
        if idx == goal:
            break
        iy, ix = divmod(idx, nx)
        gc = g[idx]
        for dx, dy, step in _STEPS:
            jx = ix + dx
            jy = iy + dy
            if jx < 0 or jx >= nx or jy < 0 or jy >= ny:
                continue
            jdx = jy * nx + jx
            if flat[jdx]:
                continue
            if dx != 0 and dy != 0:
                # no corner cutting: both orthogonal neighbors must be free
                if flat[iy * nx + jx] or flat[jy * nx + ix]:
                    continue
            ng = gc + step
            if ng < g[jdx]:
                g[jdx] = ng
                came[jdx] = idx
                nh = _octile(jx, jy, gx, gy)
                heappush(heap, (ng + nh, nh, jdx))

    if not closed[goal]:
        return None, _INF

    cells = []
    idx = goal
    while idx != start:
        iy, ix = divmod(idx, nx)
        cells.append((ix, iy))
        idx = came[idx]
    cells.append((sx, sy))
    cells.reverse()
    return cells, g[goal]


def qos_run(
    duration_s: float,
    capacity_bps: float,
    ar_times,
    ar_flow,
    ar_bits,
    ar_extra_s,
    n_ar_flows: int,
    cbr_period_s,
    cbr_bits,
    cbr_bytes,
    meter_enabled: int,
    meter_rate_bytes_s: float,
    meter_depth_bytes: float,
    cbr_queue_limit: int,
    prop_delay_s: float,
):
    """Single-link strict-priority packet simulation.

    AR packets (arrival times precomputed, sorted) always outrank CBR
    packets (periodic per flow, first arrival one period in). When the
    meter is on, each CBR arrival must draw its byte size from a token
    bucket or be dropped; conforming packets enter a FIFO bounded by
    ``cbr_queue_limit`` (tail drop). Service is non-preemptive at link
    rate. Per delivered AR packet the RTT is
    ``2 * (queueing + transmission + propagation + extra)``.

    Simultaneous events resolve: completion, then AR arrival, then CBR
    flows by index. Only transmissions completed before ``duration_s``
    count as delivered. Returns a dict of aggregate arrays; see
    :mod:`twinops.netqos` for the report built on top.
    """
    ar_times = np.asarray(ar_times, dtype=np.float64).tolist()
    ar_flow = np.asarray(ar_flow, dtype=np.int32).tolist()
    ar_bits = np.asarray(ar_bits, dtype=np.float64).tolist()
    ar_extra_s = np.asarray(ar_extra_s, dtype=np.float64).tolist()
    cbr_period = np.asarray(cbr_period_s, dtype=np.float64).tolist()
    cbr_bits = np.asarray(cbr_bits, dtype=np.float64).tolist()
    cbr_bytes = np.asarray(cbr_bytes, dtype=np.float64).tolist()

    n_ar = len(ar_times)
    m = len(cbr_period)

    ar_delivered_bits = [0.0] * n_ar_flows
    ar_delivered_count = [0] * n_ar_flows
    cbr_delivered_bits = [0.0] * m
    cbr_delivered_count = [0] * m
    cbr_meter_drops = [0] * m
    cbr_tail_drops = [0] * m
    cbr_arrivals = [0] * m

    rtt = np.empty(n_ar, dtype=np.float64)
    rtt_flow = np.empty(n_ar, dtype=np.int32)
    n_rtt = 0

    qcap = int(cbr_queue_limit)
    cbr_q = [0] * qcap
    q_head = 0
    q_len = 0

    i_ar = 0          # next AR packet to arrive
    ar_q_head = 0     # next AR packet to serve; AR queue is [ar_q_head, i_ar)
    cbr_next_k = [1] * m

    tokens = meter_depth_bytes
    tokens_t = 0.0

    busy = False
    done_t = 0.0
    srv_class = -1    # 0 = AR, 1 = CBR, -1 = idle
    srv_flow = -1
    srv_bits = 0.0
    srv_ar_idx = -1
    busy_s = 0.0

    while True:
        t_ar = ar_times[i_ar] if i_ar < n_ar else _INF
        t_cbr = _INF
        f_cbr = -1
        for f in range(m):
            tf = cbr_next_k[f] * cbr_period[f]
            if tf < t_cbr:
                t_cbr = tf
                f_cbr = f
        t_done = done_t if busy else _INF

        if busy and t_done <= t_ar and t_done <= t_cbr:
            if t_done >= duration_s:
                break
            t = t_done
            # delivery
            busy_s += srv_bits / capacity_bps
            if srv_class == 0:
                fl = ar_flow[srv_ar_idx]
                ar_delivered_bits[fl] += srv_bits
                ar_delivered_count[fl] += 1
                rtt[n_rtt] = 2.0 * (
                    (t - ar_times[srv_ar_idx]) + prop_delay_s + ar_extra_s[srv_ar_idx]
                )
                rtt_flow[n_rtt] = fl
                n_rtt += 1
            else:
                cbr_delivered_bits[srv_flow] += srv_bits
                cbr_delivered_count[srv_flow] += 1
            # start next service
            if ar_q_head < i_ar:
                srv_class = 0
                srv_ar_idx = ar_q_head
                srv_bits = ar_bits[ar_q_head]
                ar_q_head += 1
                done_t = t + srv_bits / capacity_bps
            elif q_len > 0:
                srv_class = 1
                srv_flow = cbr_q[q_head]
                q_head = (q_head + 1) % qcap
                q_len -= 1
                srv_bits = cbr_bits[srv_flow]
                done_t = t + srv_bits / capacity_bps
            else:
                busy = False
                srv_class = -1
        elif t_ar <= t_cbr:
            if t_ar >= duration_s:
                break
            t = t_ar
            i_ar += 1
            if not busy:
                srv_class = 0
                srv_ar_idx = ar_q_head
                srv_bits = ar_bits[ar_q_head]
                ar_q_head += 1
                busy = True
                done_t = t + srv_bits / capacity_bps
        else:
            if t_cbr >= duration_s:
                break
            t = t_cbr
            f = f_cbr
            cbr_next_k[f] += 1
            cbr_arrivals[f] += 1
            if meter_enabled:
                tokens = tokens + (t - tokens_t) * meter_rate_bytes_s
                if tokens > meter_depth_bytes:
                    tokens = meter_depth_bytes
                tokens_t = t
                if tokens >= cbr_bytes[f]:
                    tokens -= cbr_bytes[f]
                    conform = True
                else:
                    cbr_meter_drops[f] += 1
                    conform = False
            else:
                conform = True
            if conform:
                if q_len < qcap:
                    cbr_q[(q_head + q_len) % qcap] = f
                    q_len += 1
                else:
                    cbr_tail_drops[f] += 1
            if not busy and (ar_q_head < i_ar or q_len > 0):
                if ar_q_head < i_ar:
                    srv_class = 0
                    srv_ar_idx = ar_q_head
                    srv_bits = ar_bits[ar_q_head]
                    ar_q_head += 1
                else:
                    srv_class = 1
                    srv_flow = cbr_q[q_head]
                    q_head = (q_head + 1) % qcap
                    q_len -= 1
                    srv_bits = cbr_bits[srv_flow]
                busy = True
                done_t = t + srv_bits / capacity_bps

    return {
        "ar_delivered_bits": np.asarray(ar_delivered_bits, dtype=np.float64),
        "ar_delivered_count": np.asarray(ar_delivered_count, dtype=np.int64),
        "cbr_delivered_bits": np.asarray(cbr_delivered_bits, dtype=np.float64),
        "cbr_delivered_count": np.asarray(cbr_delivered_count, dtype=np.int64),
        "cbr_meter_drops": np.asarray(cbr_meter_drops, dtype=np.int64),
        "cbr_tail_drops": np.asarray(cbr_tail_drops, dtype=np.int64),
        "cbr_arrivals": np.asarray(cbr_arrivals, dtype=np.int64),
        "ar_arrivals": i_ar,
        "ar_rtt_s": rtt[:n_rtt].copy(),
        "ar_rtt_flow": rtt_flow[:n_rtt].copy(),
        "busy_s": busy_s,
        "ar_queued_end": i_ar - ar_q_head,
        "cbr_queued_end": q_len,
        "in_service_class": srv_class if busy else -1,
    }
