# cython: language_level=3
"""Compiled kernels: grid A-star and the QoS packet event loop.

Operation-for-operation mirror of ``twinops._core_py``; both perform the
same double-precision arithmetic in the same order, so results agree
bit-for-bit. Keep the two in sync.
"""

from cpython.mem cimport PyMem_Free, PyMem_Malloc, PyMem_Realloc

from libc.math cimport INFINITY, sqrt

import numpy as np

cdef double SQRT2 = sqrt(2.0)

cdef struct HeapEntry:
    double f
    double h
    long idx


cdef inline bint _less(HeapEntry a, HeapEntry b) nogil:
    if a.f != b.f:
        return a.f < b.f
    if a.h != b.h:
        return a.h < b.h
    return a.idx < b.idx


cdef inline double _octile(long ix, long iy, long gx, long gy) nogil:
    cdef long dx = ix - gx
    cdef long dy = iy - gy
    cdef long dmin, dmax
    if dx < 0:
        dx = -dx
    if dy < 0:
        dy = -dy
    if dx < dy:
        dmin = dx
        dmax = dy
    else:
        dmin = dy
        dmax = dx
    return <double>(dmax - dmin) + SQRT2 * <double>dmin


def astar_search(blocked, long sx, long sy, long gx, long gy):
    """See ``twinops._core_py.astar_search``; identical contract."""
    grid = np.ascontiguousarray(blocked, dtype=np.uint8)
    cdef unsigned char[:, ::1] cells_v = grid
    cdef long ny = cells_v.shape[0]
    cdef long nx = cells_v.shape[1]
    cdef long size = nx * ny
    cdef long start = sy * nx + sx
    cdef long goal = gy * nx + gx

    g_arr = np.full(size, np.inf, dtype=np.float64)
    came_arr = np.full(size, -1, dtype=np.int64)
    closed_arr = np.zeros(size, dtype=np.uint8)
    cdef double[::1] g = g_arr
    cdef long[::1] came = came_arr
    cdef unsigned char[::1] closed = closed_arr

    cdef long cap = 1024
    cdef HeapEntry* heap = <HeapEntry*>PyMem_Malloc(cap * sizeof(HeapEntry))
    if heap == NULL:
        raise MemoryError()
    cdef long n_heap = 0

    # step table: 4 axial then 4 diagonal, matching the fallback
    cdef long[8] step_x = [1, -1, 0, 0, 1, 1, -1, -1]
    cdef long[8] step_y = [0, 0, 1, -1, 1, -1, 1, -1]
    cdef double[8] step_c = [1.0, 1.0, 1.0, 1.0, SQRT2, SQRT2, SQRT2, SQRT2]

    cdef HeapEntry entry, top
    cdef HeapEntry* grown
    cdef long i, child, parent, k
    cdef long idx, ix, iy, jx, jy, jdx
    cdef double gc, ng, nh
    cdef bint found = False

    g[start] = 0.0
    entry.h = _octile(sx, sy, gx, gy)
    entry.f = entry.h
    entry.idx = start
    heap[0] = entry
    n_heap = 1

    try:
        while n_heap > 0:
            top = heap[0]
            n_heap -= 1
            # sift down the last element
            if n_heap > 0:
                entry = heap[n_heap]
                i = 0
                while True:
                    child = 2 * i + 1
                    if child >= n_heap:
                        break
                    if child + 1 < n_heap and _less(heap[child + 1], heap[child]):
                        child += 1
                    if _less(heap[child], entry):
                        heap[i] = heap[child]
                        i = child
                    else:
                        break
                heap[i] = entry

            idx = top.idx
            if closed[idx]:
                continue
            closed[idx] = 1
            if idx == goal:
                found = True
                break
            iy = idx // nx
            ix = idx - iy * nx
            gc = g[idx]
            for k in range(8):
                jx = ix + step_x[k]
                jy = iy + step_y[k]
                if jx < 0 or jx >= nx or jy < 0 or jy >= ny:
                    continue
                jdx = jy * nx + jx
                if cells_v[jy, jx]:
                    continue
                if step_x[k] != 0 and step_y[k] != 0:
                    if cells_v[iy, jx] or cells_v[jy, ix]:
                        continue
                ng = gc + step_c[k]
                if ng < g[jdx]:
                    g[jdx] = ng
                    came[jdx] = idx
                    nh = _octile(jx, jy, gx, gy)
                    # push
                    if n_heap == cap:
                        cap *= 2
                        grown = <HeapEntry*>PyMem_Realloc(heap, cap * sizeof(HeapEntry))
                        if grown == NULL:
                            raise MemoryError()
                        heap = grown
                    entry.f = ng + nh
                    entry.h = nh
                    entry.idx = jdx
                    i = n_heap
                    n_heap += 1
                    while i > 0:
                        parent = (i - 1) // 2
                        if _less(entry, heap[parent]):
                            heap[i] = heap[parent]
                            i = parent
                        else:
                            break
                    heap[i] = entry
    finally:
        PyMem_Free(heap)

    if not found and not closed[goal]:
        return None, float("inf")

    path = []
    idx = goal
    while idx != start:
        iy = idx // nx
        ix = idx - iy * nx
        path.append((ix, iy))
        idx = came[idx]
    path.append((sx, sy))
    path.reverse()
    return path, g_arr[goal]


def qos_run(
    double duration_s,
    double capacity_bps,
    ar_times,
    ar_flow,
    ar_bits,
    ar_extra_s,
    long n_ar_flows,
    cbr_period_s,
    cbr_bits,
    cbr_bytes,
    int meter_enabled,
    double meter_rate_bytes_s,
    double meter_depth_bytes,
    long cbr_queue_limit,
    double prop_delay_s,
):
    """See ``twinops._core_py.qos_run``; identical contract."""
    cdef double[::1] arr_t = np.ascontiguousarray(ar_times, dtype=np.float64)
    cdef int[::1] arr_f = np.ascontiguousarray(ar_flow, dtype=np.int32)
    cdef double[::1] arr_b = np.ascontiguousarray(ar_bits, dtype=np.float64)
    cdef double[::1] arr_x = np.ascontiguousarray(ar_extra_s, dtype=np.float64)
    cdef double[::1] per = np.ascontiguousarray(cbr_period_s, dtype=np.float64)
    cdef double[::1] cbits = np.ascontiguousarray(cbr_bits, dtype=np.float64)
    cdef double[::1] cbytes = np.ascontiguousarray(cbr_bytes, dtype=np.float64)

    cdef long n_ar = arr_t.shape[0]
    cdef long m = per.shape[0]

    ar_db = np.zeros(n_ar_flows, dtype=np.float64)
    ar_dc = np.zeros(n_ar_flows, dtype=np.int64)
    cbr_db = np.zeros(m, dtype=np.float64)
    cbr_dc = np.zeros(m, dtype=np.int64)
    cbr_md = np.zeros(m, dtype=np.int64)
    cbr_td = np.zeros(m, dtype=np.int64)
    cbr_ar = np.zeros(m, dtype=np.int64)
    rtt_arr = np.empty(n_ar, dtype=np.float64)
    rttf_arr = np.empty(n_ar, dtype=np.int32)

    cdef double[::1] ar_delivered_bits = ar_db
    cdef long[::1] ar_delivered_count = ar_dc
    cdef double[::1] cbr_delivered_bits = cbr_db
    cdef long[::1] cbr_delivered_count = cbr_dc
    cdef long[::1] cbr_meter_drops = cbr_md
    cdef long[::1] cbr_tail_drops = cbr_td
    cdef long[::1] cbr_arrivals = cbr_ar
    cdef double[::1] rtt = rtt_arr
    cdef int[::1] rtt_flow = rttf_arr
    cdef long n_rtt = 0

    cdef long qcap = cbr_queue_limit
    cbrq_arr = np.zeros(qcap, dtype=np.int32)
    cdef int[::1] cbr_q = cbrq_arr
    cdef long q_head = 0
    cdef long q_len = 0

    cdef long i_ar = 0
    cdef long ar_q_head = 0
    next_k_arr = np.ones(m, dtype=np.int64)
    cdef long[::1] cbr_next_k = next_k_arr

    cdef double tokens = meter_depth_bytes
    cdef double tokens_t = 0.0

    cdef bint busy = False
    cdef double done_t = 0.0
    cdef int srv_class = -1
    cdef long srv_flow = -1
    cdef double srv_bits = 0.0
    cdef long srv_ar_idx = -1
    cdef double busy_s = 0.0

    cdef double t_ar, t_cbr, t_done, t, tf
    cdef long f, f_cbr, fl
    cdef bint conform

    while True:
        t_ar = arr_t[i_ar] if i_ar < n_ar else INFINITY
        t_cbr = INFINITY
        f_cbr = -1
        for f in range(m):
            tf = <double>cbr_next_k[f] * per[f]
            if tf < t_cbr:
                t_cbr = tf
                f_cbr = f
        t_done = done_t if busy else INFINITY

        if busy and t_done <= t_ar and t_done <= t_cbr:
            if t_done >= duration_s:
                break
            t = t_done
            busy_s += srv_bits / capacity_bps
            if srv_class == 0:
                fl = arr_f[srv_ar_idx]
                ar_delivered_bits[fl] += srv_bits
                ar_delivered_count[fl] += 1
                rtt[n_rtt] = 2.0 * (
                    (t - arr_t[srv_ar_idx]) + prop_delay_s + arr_x[srv_ar_idx]
                )
                rtt_flow[n_rtt] = <int>fl
                n_rtt += 1
            else:
                cbr_delivered_bits[srv_flow] += srv_bits
                cbr_delivered_count[srv_flow] += 1
            if ar_q_head < i_ar:
                srv_class = 0
                srv_ar_idx = ar_q_head
                srv_bits = arr_b[ar_q_head]
                ar_q_head += 1
                done_t = t + srv_bits / capacity_bps
            elif q_len > 0:
                srv_class = 1
                srv_flow = cbr_q[q_head]
                q_head = (q_head + 1) % qcap
                q_len -= 1
                srv_bits = cbits[srv_flow]
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
                srv_bits = arr_b[ar_q_head]
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
                if tokens >= cbytes[f]:
                    tokens -= cbytes[f]
                    conform = True
                else:
                    cbr_meter_drops[f] += 1
                    conform = False
            else:
                conform = True
            if conform:
                if q_len < qcap:
                    cbr_q[(q_head + q_len) % qcap] = <int>f
                    q_len += 1
                else:
                    cbr_tail_drops[f] += 1
            if not busy and (ar_q_head < i_ar or q_len > 0):
                if ar_q_head < i_ar:
                    srv_class = 0
                    srv_ar_idx = ar_q_head
                    srv_bits = arr_b[ar_q_head]
                    ar_q_head += 1
                else:
                    srv_class = 1
                    srv_flow = cbr_q[q_head]
                    q_head = (q_head + 1) % qcap
                    q_len -= 1
                    srv_bits = cbits[srv_flow]
                busy = True
                done_t = t + srv_bits / capacity_bps

    return {
        "ar_delivered_bits": ar_db,
        "ar_delivered_count": ar_dc,
        "cbr_delivered_bits": cbr_db,
        "cbr_delivered_count": cbr_dc,
        "cbr_meter_drops": cbr_md,
        "cbr_tail_drops": cbr_td,
        "cbr_arrivals": cbr_ar,
        "ar_arrivals": i_ar,
        "ar_rtt_s": rtt_arr[:n_rtt].copy(),
        "ar_rtt_flow": rttf_arr[:n_rtt].copy(),
        "busy_s": busy_s,
        "ar_queued_end": i_ar - ar_q_head,
        "cbr_queued_end": q_len,
        "in_service_class": srv_class if busy else -1,
    }
