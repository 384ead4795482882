"""Round-trip latency decomposition and histograms.

Each request/response pair yields four timestamps, two per clock domain:
client send/receive and server receive/send. Inference time is the
server-side difference, total is the client-side difference, and network
time is what remains. Clocks are never compared across domains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from twinops.errors import NonMonotoneTimestampsError


@dataclass(frozen=True)
class LatencyRecord:
    msg_id: int
    inference_ms: float
    network_rtt_ms: float
    total_ms: float

    def to_dict(self) -> dict:
        return {
            "msg_id": self.msg_id,
            "inference_ms": self.inference_ms,
            "network_rtt_ms": self.network_rtt_ms,
            "total_ms": self.total_ms,
        }


def account_latency(
    msg_id: int,
    client_send_ts_ms: float,
    client_recv_ts_ms: float,
    server_recv_ts_ms: float,
    server_send_ts_ms: float,
) -> LatencyRecord:
    """Split a round trip into inference and network components.

    Raises NonMonotoneTimestampsError when either clock domain runs
    backwards or inference exceeds the total (which would make the
    network share negative).
    """
    if client_recv_ts_ms < client_send_ts_ms:
        raise NonMonotoneTimestampsError("client clock ran backwards")
    if server_send_ts_ms < server_recv_ts_ms:
        raise NonMonotoneTimestampsError("server clock ran backwards")
    total_ms = client_recv_ts_ms - client_send_ts_ms
    inference_ms = server_send_ts_ms - server_recv_ts_ms
    network_ms = total_ms - inference_ms
    if network_ms < 0:
        raise NonMonotoneTimestampsError(
            f"inference {inference_ms:.3f} ms exceeds total {total_ms:.3f} ms"
        )
    return LatencyRecord(
        msg_id=msg_id,
        inference_ms=inference_ms,
        network_rtt_ms=network_ms,
        total_ms=total_ms,
    )


def latency_histogram(
    values_ms, bin_ms: float = 1.0
) -> tuple[np.ndarray, np.ndarray]:
    """(counts, edges) over fixed-width bins covering every sample.

    Counts always sum to the number of samples; the last edge is nudged
    past the maximum so it lands inside the final bin.
    """
    if bin_ms <= 0:
        raise ValueError("bin_ms must be > 0")
    vals = np.asarray(list(values_ms), dtype=np.float64)
    if vals.size == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(1)
    hi = float(np.max(vals))
    n_bins = max(1, int(math.floor(hi / bin_ms)) + 1)
    edges = np.arange(n_bins + 1, dtype=np.float64) * bin_ms
    if edges[-1] <= hi:
        edges[-1] = np.nextafter(hi, math.inf)
    counts, _ = np.histogram(vals, bins=edges)
    return counts, edges
