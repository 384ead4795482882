"""Remote edge service: framed protocol, task dispatch, collab sync."""

from twinops.edged.client import EdgeClient
from twinops.edged.latency import LatencyRecord, account_latency, latency_histogram
from twinops.edged.service import EdgeService

__all__ = [
    "EdgeClient",
    "EdgeService",
    "LatencyRecord",
    "account_latency",
    "latency_histogram",
]
