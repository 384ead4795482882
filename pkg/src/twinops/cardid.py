"""Card identification: detector interface, slot matching, alarm overlays.

Object detection itself is pluggable; this module owns what happens after
detection. Bounding boxes are matched to shelf slots by relative position
(horizontal bands, then left-to-right order within a band, aligned to the
slot models with an order-preserving subsequence match), and matched cards
are colored by the localization verdict: RED for the root cause, BLUE for
alarmed-but-secondary cards, NONE otherwise.

A synthetic detector renders detections straight from a ground-truth shelf
arrangement with configurable jitter, which is what the tests and the demo
scenario use.
"""

from __future__ import annotations

import random
import statistics
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional, Protocol, Sequence

from twinops.errors import DetectorUnavailableError, NoDetectionsError
from twinops.faultloc import Alarm, LocalizationResult
from twinops.topology import ShelfArrangement

#: Detections below this confidence are ignored by default.
DEFAULT_CONFIDENCE_THRESHOLD = 0.5

#: Lower bound for confidences the synthetic detector samples.
DEFAULT_CONFIDENCE_FLOOR = 0.85


@dataclass(frozen=True)
class Detection:
    """One detected card: model label, normalized bbox, confidence."""

    label: str
    bbox: tuple[float, float, float, float]  # (cx, cy, w, h), all in [0,1]
    confidence: float

    def __post_init__(self):
        cx, cy, w, h = self.bbox
        if w <= 0 or h <= 0:
            raise ValueError("bbox width/height must be > 0")
        if not (0.0 <= cx - w / 2 and cx + w / 2 <= 1.0 and 0.0 <= cy - h / 2 and cy + h / 2 <= 1.0):
            raise ValueError(f"bbox {self.bbox} exceeds the unit square")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0,1]")

    def to_dict(self) -> dict:
        return {"label": self.label, "bbox": list(self.bbox), "confidence": self.confidence}

    @classmethod
    def from_dict(cls, raw: dict) -> "Detection":
        return cls(
            label=str(raw["label"]),
            bbox=tuple(float(v) for v in raw["bbox"]),
            confidence=float(raw["confidence"]),
        )


@dataclass(frozen=True)
class SlotAssignment:
    """Injective mapping from detection index to arrangement slot index."""

    mapping: Mapping[int, int]
    unmatched_detections: tuple[int, ...]
    unmatched_slots: tuple[int, ...]


class OverlayColor(str, Enum):
    RED = "RED"
    BLUE = "BLUE"
    NONE = "NONE"


@dataclass(frozen=True)
class OverlayItem:
    """Display payload for one matched card, in slot order."""

    element_id: str
    slot: int
    label: str
    confidence: float
    color: OverlayColor

    def to_dict(self) -> dict:
        return {
            "element_id": self.element_id,
            "slot": self.slot,
            "label": self.label,
            "confidence": self.confidence,
            "color": self.color.value,
        }


class Detector(Protocol):
    """Anything that turns a frame handle into detections."""

    def detect(self, frame: str) -> list[Detection]: ...


class SyntheticDetector:
    """Detector that renders boxes from known shelf arrangements.

    Frames are layout ids resolved against ``arrangements``. Boxes are
    centered on their slots, jittered by gaussian ``sigma`` on the center
    coordinates, with confidences uniform in [conf_floor, 1]. Calls are
    pure: the same (seed, frame) pair always yields the same detections,
    so concurrent use is safe.
    """

    def __init__(
        self,
        arrangements: Mapping[str, ShelfArrangement],
        sigma: float = 0.0,
        conf_floor: float = DEFAULT_CONFIDENCE_FLOOR,
        seed: int = 0,
    ):
        if sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not 0.0 <= conf_floor <= 1.0:
            raise ValueError("conf_floor must be in [0,1]")
        self._arrangements = dict(arrangements)
        self._sigma = sigma
        self._conf_floor = conf_floor
        self._seed = seed

    def detect(self, frame: str) -> list[Detection]:
        arr = self._arrangements.get(frame)
        if arr is None:
            raise DetectorUnavailableError(f"no synthetic layout for frame {frame!r}")
        rng = random.Random(f"{self._seed}:{frame}")
        if not arr.slots:
            return []
        n_positions = max(e.slot for e in arr.slots) + 1
        w = 0.8 / n_positions
        h = 0.6
        out = []
        for entry in arr.slots:
            cx = (entry.slot + 0.5) / n_positions + rng.gauss(0.0, self._sigma)
            cy = 0.5 + rng.gauss(0.0, self._sigma)
            # jitter must not push the box outside the unit square
            cx = min(max(cx, w / 2), 1.0 - w / 2)
            cy = min(max(cy, h / 2), 1.0 - h / 2)
            conf = rng.uniform(self._conf_floor, 1.0)
            out.append(Detection(label=entry.model, bbox=(cx, cy, w, h), confidence=conf))
        return out


def _lcs_pairs(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int]]:
    """Index pairs of one longest common subsequence of a and b.

    Deterministic: prefers consuming earlier elements of both sequences,
    so equal sequences align index-to-index.
    """
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = dp[i], dp[i + 1]
        for j in range(m - 1, -1, -1):
            if a[i] == b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = max(nxt[j], row[j + 1])
    pairs = []
    i = j = 0
    while i < n and j < m:
        if a[i] == b[j] and dp[i][j] == dp[i + 1][j + 1] + 1:
            pairs.append((i, j))
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def reading_order(detections: Sequence[Detection], indices: Sequence[int]) -> list[int]:
    """Order detection indices into horizontal bands, left to right.

    Band height is the median box height; a detection starts a new band
    when its cy exceeds the current band anchor by more than that.
    """
    if not indices:
        return []
    band_h = statistics.median(detections[i].bbox[3] for i in indices)
    by_cy = sorted(indices, key=lambda i: (detections[i].bbox[1], detections[i].bbox[0], i))
    bands: list[list[int]] = []
    anchor = None
    for i in by_cy:
        cy = detections[i].bbox[1]
        if anchor is None or cy - anchor > band_h:
            bands.append([])
            anchor = cy
        bands[-1].append(i)
    ordered = []
    for band in bands:
        ordered.extend(sorted(band, key=lambda i: (detections[i].bbox[0], i)))
    return ordered


def match_slots(
    detections: Sequence[Detection],
    arrangement: ShelfArrangement,
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> SlotAssignment:
    """Assign detections to arrangement slots by relative position.

    Confident detections are put in reading order (bands by cy, then cx)
    and aligned against the slot models with a longest-common-subsequence
    match, so duplicate models resolve purely by x-order. The result is
    injective; leftovers land in the unmatched lists.
    """
    if not arrangement.slots:
        raise ValueError("arrangement must be non-empty")
    kept = [i for i, d in enumerate(detections) if d.confidence >= threshold]
    if not kept:
        raise NoDetectionsError("no detections at or above the confidence threshold")
    ordered = reading_order(detections, kept)
    det_labels = [detections[i].label for i in ordered]
    slot_labels = [e.model for e in arrangement.slots]
    pairs = _lcs_pairs(det_labels, slot_labels)
    mapping = {ordered[di]: sj for di, sj in pairs}
    matched_slots = set(mapping.values())
    return SlotAssignment(
        mapping=mapping,
        unmatched_detections=tuple(
            i for i in range(len(detections)) if i not in mapping
        ),
        unmatched_slots=tuple(
            j for j in range(len(arrangement.slots)) if j not in matched_slots
        ),
    )


def overlay(
    detections: Sequence[Detection],
    assignment: SlotAssignment,
    arrangement: ShelfArrangement,
    localization: Optional[LocalizationResult],
    alarms: Sequence[Alarm],
) -> list[OverlayItem]:
    """Color matched cards by the localization verdict, in slot order.

    RED marks the root cause (at most one), BLUE an alarmed card that is
    not the root cause, NONE everything else.
    """
    alarmed = {a.element_id for a in alarms}
    root = localization.root_cause_id if localization is not None else None
    items = []
    for det_idx, slot_idx in sorted(assignment.mapping.items(), key=lambda kv: kv[1]):
        entry = arrangement.slots[slot_idx]
        det = detections[det_idx]
        if entry.element_id == root:
            color = OverlayColor.RED
        elif entry.element_id in alarmed:
            color = OverlayColor.BLUE
        else:
            color = OverlayColor.NONE
        items.append(
            OverlayItem(
                element_id=entry.element_id,
                slot=entry.slot,
                label=det.label,
                confidence=det.confidence,
                color=color,
            )
        )
    return items


def root_cause_visible(items: Sequence[OverlayItem]) -> bool:
    return any(item.color is OverlayColor.RED for item in items)
