"""Shared-link QoS simulation: strict priority, CBR metering, AR RTT.

One 100G-class link carries latency-sensitive AR traffic next to bulk CBR
streams. The simulator reproduces the treatment that keeps AR usable: a
token-bucket meter caps the CBR class (drop on nonconformance) and a
strict-priority scheduler serves AR first. Reports carry per-flow achieved
throughput, drop counters, and per-packet AR round-trip times.

The packet event loop itself lives in :mod:`twinops.kernels`; this module
validates configuration, synthesizes arrival processes, and shapes the
report. An optional Wi-Fi ingress stage (fixed rate and added latency)
models the wireless hop AR traffic takes before the optical path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from twinops import kernels
from twinops.errors import InvalidConfigError

AR = "AR"
CBR = "CBR"

#: Token-bucket depth default: 100 full-size packets of headroom.
DEFAULT_BURST_BYTES = 150_000

#: Bounded CBR queue (packets); AR is never tail-dropped.
DEFAULT_CBR_QUEUE_LIMIT = 1_000

#: Single-mode fiber group delay, microseconds per km.
DEFAULT_PER_KM_DELAY_US = 5.0


@dataclass(frozen=True)
class LinkSpec:
    capacity_gbps: float = 100.0
    length_km: float = 0.0
    per_km_delay_us: float = DEFAULT_PER_KM_DELAY_US


@dataclass(frozen=True)
class FlowSpec:
    flow_id: str
    traffic_class: str  # AR or CBR
    offered_gbps: float
    packet_bytes: int = 1500


@dataclass(frozen=True)
class MeterSpec:
    enabled: bool = True
    cbr_cap_gbps: float = 90.0
    burst_bytes: float = DEFAULT_BURST_BYTES


@dataclass(frozen=True)
class WifiSpec:
    """Fixed-rate, fixed-latency ingress hop for AR flows."""

    rate_gbps: float = 2.5
    latency_ms: float = 2.0


@dataclass(frozen=True)
class BucketState:
    tokens: float
    t_s: float


@dataclass(frozen=True)
class FlowStats:
    flow_id: str
    traffic_class: str
    offered_gbps: float
    achieved_gbps: float
    arrivals: int
    delivered: int
    meter_drops: int
    tail_drops: int
    mean_rtt_ms: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "flow_id": self.flow_id,
            "traffic_class": self.traffic_class,
            "offered_gbps": self.offered_gbps,
            "achieved_gbps": self.achieved_gbps,
            "arrivals": self.arrivals,
            "delivered": self.delivered,
            "meter_drops": self.meter_drops,
            "tail_drops": self.tail_drops,
            "mean_rtt_ms": self.mean_rtt_ms,
        }


@dataclass(frozen=True)
class QosReport:
    duration_s: float
    capacity_gbps: float
    meter_enabled: bool
    propagation_ms: float
    flows: tuple[FlowStats, ...]
    ar_rtt_ms: np.ndarray = field(repr=False)
    ar_rtt_flow: tuple[str, ...] = field(repr=False)
    busy_fraction: float = 0.0

    def flow(self, flow_id: str) -> FlowStats:
        for st in self.flows:
            if st.flow_id == flow_id:
                return st
        raise KeyError(flow_id)

    @property
    def mean_ar_rtt_ms(self) -> float:
        return float(np.mean(self.ar_rtt_ms)) if self.ar_rtt_ms.size else math.nan

    def rtt_percentile_ms(self, q: float) -> float:
        return float(np.percentile(self.ar_rtt_ms, q)) if self.ar_rtt_ms.size else math.nan

    def rtt_histogram(self, bin_ms: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """(counts, edges) with fixed-width bins covering all samples."""
        if self.ar_rtt_ms.size == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(1)
        hi = float(np.max(self.ar_rtt_ms))
        n_bins = max(1, int(math.ceil(hi / bin_ms + 1e-12)))
        edges = np.arange(n_bins + 1, dtype=np.float64) * bin_ms
        counts, _ = np.histogram(self.ar_rtt_ms, bins=edges)
        return counts, edges

    def to_dict(self, include_samples: bool = False) -> dict:
        out = {
            "duration_s": self.duration_s,
            "capacity_gbps": self.capacity_gbps,
            "meter_enabled": self.meter_enabled,
            "propagation_ms": self.propagation_ms,
            "busy_fraction": self.busy_fraction,
            "flows": [st.to_dict() for st in self.flows],
            "ar_rtt": {
                "count": int(self.ar_rtt_ms.size),
                "mean_ms": None if not self.ar_rtt_ms.size else self.mean_ar_rtt_ms,
                "p50_ms": None if not self.ar_rtt_ms.size else self.rtt_percentile_ms(50),
                "p95_ms": None if not self.ar_rtt_ms.size else self.rtt_percentile_ms(95),
                "p99_ms": None if not self.ar_rtt_ms.size else self.rtt_percentile_ms(99),
                "max_ms": None if not self.ar_rtt_ms.size else float(np.max(self.ar_rtt_ms)),
            },
        }
        if include_samples:
            out["ar_rtt"]["samples_ms"] = self.ar_rtt_ms.tolist()
            out["ar_rtt"]["flow_ids"] = list(self.ar_rtt_flow)
        return out


def propagation_delay_ms(length_km: float, per_km_delay_us: float = DEFAULT_PER_KM_DELAY_US) -> float:
    """One-way propagation delay over the fiber, in milliseconds."""
    if length_km < 0 or per_km_delay_us < 0:
        raise InvalidConfigError("length and per-km delay must be >= 0")
    return length_km * per_km_delay_us / 1000.0


def token_bucket_conform(
    pkt_bytes: float,
    state: BucketState,
    rate_bytes_s: float,
    depth_bytes: float,
    t_s: float,
) -> tuple[bool, BucketState]:
    """Classic token bucket: refill to depth, conform iff enough tokens."""
    tokens = state.tokens + (t_s - state.t_s) * rate_bytes_s
    if tokens > depth_bytes:
        tokens = depth_bytes
    if tokens >= pkt_bytes:
        return True, BucketState(tokens=tokens - pkt_bytes, t_s=t_s)
    return False, BucketState(tokens=tokens, t_s=t_s)


def _validate(
    link: LinkSpec,
    flows: Sequence[FlowSpec],
    meter: MeterSpec,
    duration_s: float,
    wifi: Optional[WifiSpec],
    cbr_queue_limit: int,
) -> None:
    if duration_s <= 0:
        raise InvalidConfigError("duration_s must be > 0")
    if link.capacity_gbps <= 0:
        raise InvalidConfigError("link capacity must be > 0")
    if link.length_km < 0 or link.per_km_delay_us < 0:
        raise InvalidConfigError("link length and per-km delay must be >= 0")
    seen = set()
    for fl in flows:
        if fl.flow_id in seen:
            raise InvalidConfigError(f"duplicate flow_id {fl.flow_id!r}")
        seen.add(fl.flow_id)
        if fl.traffic_class not in (AR, CBR):
            raise InvalidConfigError(f"flow {fl.flow_id!r}: unknown class {fl.traffic_class!r}")
        if fl.offered_gbps < 0:
            raise InvalidConfigError(f"flow {fl.flow_id!r}: offered_gbps must be >= 0")
        if fl.packet_bytes <= 0:
            raise InvalidConfigError(f"flow {fl.flow_id!r}: packet_bytes must be > 0")
    if meter.enabled:
        if meter.cbr_cap_gbps <= 0:
            raise InvalidConfigError("meter cap must be > 0")
        if meter.cbr_cap_gbps > link.capacity_gbps:
            raise InvalidConfigError("meter cap must not exceed link capacity")
        for fl in flows:
            if fl.traffic_class == CBR and meter.burst_bytes < fl.packet_bytes:
                raise InvalidConfigError(
                    f"meter burst {meter.burst_bytes} B below packet size of flow {fl.flow_id!r}"
                )
    if cbr_queue_limit < 1:
        raise InvalidConfigError("cbr_queue_limit must be >= 1")
    if wifi is not None:
        if wifi.rate_gbps <= 0:
            raise InvalidConfigError("wifi rate must be > 0")
        if wifi.latency_ms < 0:
            raise InvalidConfigError("wifi latency must be >= 0")


def _ar_arrivals(
    flow: FlowSpec, flow_idx: int, duration_s: float, seed: int, wifi: Optional[WifiSpec]
) -> tuple[np.ndarray, np.ndarray]:
    """(link arrival times, per-packet extra delay) for one AR flow.

    Arrivals are Poisson, thinned so total arriving bits never exceed the
    offered load over the horizon. The optional Wi-Fi hop is a FIFO at
    fixed rate plus fixed latency, folded into the extra-delay term.
    """
    bits = flow.packet_bytes * 8.0
    offered_bps = flow.offered_gbps * 1e9
    if offered_bps <= 0:
        return np.zeros(0), np.zeros(0)
    lam = offered_bps / bits
    n_cap = int(math.floor(offered_bps * duration_s / bits))
    if n_cap == 0:
        return np.zeros(0), np.zeros(0)
    rng = np.random.default_rng([seed, flow_idx])
    gen = np.cumsum(rng.exponential(1.0 / lam, size=n_cap))
    gen = gen[gen < duration_s]
    if wifi is None:
        return gen, np.zeros(gen.size)
    tx = bits / (wifi.rate_gbps * 1e9)
    lat = wifi.latency_ms / 1e3
    k = np.arange(gen.size, dtype=np.float64)
    # FIFO completion: done[i] = max(gen[i], done[i-1]) + tx, vectorized
    done = tx * (k + 1.0) + np.maximum.accumulate(gen - k * tx)
    arrive = done + lat
    return arrive, arrive - gen


def simulate(
    link: LinkSpec,
    flows: Sequence[FlowSpec],
    meter: MeterSpec,
    duration_s: float,
    seed: int = 0,
    wifi: Optional[WifiSpec] = None,
    cbr_queue_limit: int = DEFAULT_CBR_QUEUE_LIMIT,
) -> QosReport:
    """Run the packet-level simulation and compile a QosReport.

    AR flows ride strict priority over CBR; when the meter is enabled,
    CBR arrivals must conform to a token bucket (rate cbr_cap_gbps,
    depth burst_bytes) or be dropped before queueing. A fixed seed makes
    the report bit-identical across runs and kernel implementations.
    """
    _validate(link, flows, meter, duration_s, wifi, cbr_queue_limit)

    ar_flows = [f for f in flows if f.traffic_class == AR]
    cbr_flows = [f for f in flows if f.traffic_class == CBR]
    capacity_bps = link.capacity_gbps * 1e9
    prop_s = propagation_delay_ms(link.length_km, link.per_km_delay_us) / 1e3

    per_flow_times = []
    per_flow_extra = []
    for idx, fl in enumerate(ar_flows):
        times, extra = _ar_arrivals(fl, idx, duration_s, seed, wifi)
        per_flow_times.append(times)
        per_flow_extra.append(extra)

    counts = [t.size for t in per_flow_times]
    times_all = np.concatenate(per_flow_times) if per_flow_times else np.zeros(0)
    extra_all = np.concatenate(per_flow_extra) if per_flow_extra else np.zeros(0)
    flow_all = np.repeat(np.arange(len(ar_flows), dtype=np.int32), counts) if counts else np.zeros(0, dtype=np.int32)
    bits_all = np.repeat(
        np.asarray([f.packet_bytes * 8.0 for f in ar_flows], dtype=np.float64), counts
    ) if counts else np.zeros(0)
    # simultaneous AR arrivals resolve by flow index
    order = np.lexsort((flow_all, times_all)) if times_all.size else np.zeros(0, dtype=np.intp)
    times_all = np.ascontiguousarray(times_all[order])
    extra_all = np.ascontiguousarray(extra_all[order])
    flow_all = np.ascontiguousarray(flow_all[order])
    bits_all = np.ascontiguousarray(bits_all[order])

    cbr_period = np.asarray(
        [
            (f.packet_bytes * 8.0) / (f.offered_gbps * 1e9) if f.offered_gbps > 0 else math.inf
            for f in cbr_flows
        ],
        dtype=np.float64,
    )
    cbr_bits = np.asarray([f.packet_bytes * 8.0 for f in cbr_flows], dtype=np.float64)
    cbr_bytes = np.asarray([float(f.packet_bytes) for f in cbr_flows], dtype=np.float64)

    raw = kernels.qos_run(
        duration_s,
        capacity_bps,
        times_all,
        flow_all,
        bits_all,
        extra_all,
        len(ar_flows),
        cbr_period,
        cbr_bits,
        cbr_bytes,
        1 if meter.enabled else 0,
        meter.cbr_cap_gbps * 1e9 / 8.0,
        float(meter.burst_bytes),
        cbr_queue_limit,
        prop_s,
    )

    stats = []
    ar_arrival_counts = np.bincount(flow_all, minlength=len(ar_flows)) if flow_all.size else np.zeros(len(ar_flows), dtype=np.int64)
    rtt_ms = raw["ar_rtt_s"] * 1e3
    rtt_flow_idx = raw["ar_rtt_flow"]
    for idx, fl in enumerate(ar_flows):
        mask = rtt_flow_idx == idx
        mean_rtt = float(np.mean(rtt_ms[mask])) if mask.any() else None
        stats.append(
            FlowStats(
                flow_id=fl.flow_id,
                traffic_class=AR,
                offered_gbps=fl.offered_gbps,
                achieved_gbps=float(raw["ar_delivered_bits"][idx]) / duration_s / 1e9,
                arrivals=int(ar_arrival_counts[idx]),
                delivered=int(raw["ar_delivered_count"][idx]),
                meter_drops=0,
                tail_drops=0,
                mean_rtt_ms=mean_rtt,
            )
        )
    for idx, fl in enumerate(cbr_flows):
        stats.append(
            FlowStats(
                flow_id=fl.flow_id,
                traffic_class=CBR,
                offered_gbps=fl.offered_gbps,
                achieved_gbps=float(raw["cbr_delivered_bits"][idx]) / duration_s / 1e9,
                arrivals=int(raw["cbr_arrivals"][idx]),
                delivered=int(raw["cbr_delivered_count"][idx]),
                meter_drops=int(raw["cbr_meter_drops"][idx]),
                tail_drops=int(raw["cbr_tail_drops"][idx]),
                mean_rtt_ms=None,
            )
        )

    order_map = {f.flow_id: i for i, f in enumerate(flows)}
    stats.sort(key=lambda st: order_map[st.flow_id])

    return QosReport(
        duration_s=duration_s,
        capacity_gbps=link.capacity_gbps,
        meter_enabled=meter.enabled,
        propagation_ms=prop_s * 1e3,
        flows=tuple(stats),
        ar_rtt_ms=rtt_ms,
        ar_rtt_flow=tuple(ar_flows[i].flow_id for i in rtt_flow_idx),
        busy_fraction=float(raw["busy_s"]) / duration_s,
    )
