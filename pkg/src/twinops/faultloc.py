"""Alarm ingestion and root-cause localization on the topology graph.

Two interchangeable algorithms rank alarmed elements:

* :func:`localize` scores each alarmed element by how much of the alarm set
  it explains through its downstream cone, weighted by its own severity.
* :func:`localize_mp` runs fixed-weight message passing against signal flow
  and ranks by accumulated state.

:func:`propagate_fault` is the synthetic-scenario oracle: it emits the alarm
cascade a single fault would produce, so tests can check that localization
inverts it.

All functions are pure over an immutable graph and safe to call in parallel.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

from twinops.errors import EmptyAlarmsError, NotOnAnyPathError, UnknownElementError
from twinops.topology import ElementKind, TopologyGraph, downstream


class Severity(IntEnum):
    """Alarm severity, totally ordered CRITICAL > MAJOR > MINOR > WARNING."""

    WARNING = 1
    MINOR = 2
    MAJOR = 3
    CRITICAL = 4


#: Score multiplier applied to a candidate according to its own alarm severity.
SEVERITY_WEIGHT = {
    Severity.CRITICAL: 1.0,
    Severity.MAJOR: 0.75,
    Severity.MINOR: 0.5,
    Severity.WARNING: 0.25,
}

# Keyword table for severity parsing, checked in priority order. Matching is
# case-insensitive on word boundaries; first hit wins.
_SEVERITY_KEYWORDS: tuple[tuple[Severity, tuple[str, ...]], ...] = (
    (Severity.CRITICAL, ("failure", "loss of signal", "los")),
    (Severity.MAJOR, ("frame loss", "high ber")),
    (Severity.MINOR, ("degraded",)),
)

_KEYWORD_PATTERNS = [
    (sev, re.compile(r"\b" + re.escape(kw) + r"\b", re.IGNORECASE))
    for sev, keywords in _SEVERITY_KEYWORDS
    for kw in keywords
]


@dataclass(frozen=True)
class Alarm:
    element_id: str
    text: str = ""
    severity: Severity = Severity.WARNING
    timestamp_ms: int = 0

    def to_dict(self) -> dict:
        return {
            "element_id": self.element_id,
            "text": self.text,
            "severity": self.severity.name,
            "timestamp_ms": self.timestamp_ms,
        }


@dataclass(frozen=True)
class LocalizationResult:
    """Ranked verdict: first ranking entry is the root cause.

    ``explained`` maps each input alarm (by list index) to the best-ranked
    candidate whose downstream cone contains it.
    """

    root_cause_id: str
    ranking: tuple[tuple[str, float], ...]
    explained: dict[int, str]

    def to_dict(self) -> dict:
        return {
            "root_cause_id": self.root_cause_id,
            "ranking": [[eid, score] for eid, score in self.ranking],
            "explained": {str(i): eid for i, eid in sorted(self.explained.items())},
        }


def parse_severity(text: str) -> Severity:
    """Map free alarm text to a severity via the keyword table.

    Total and case-insensitive; unrecognized or empty text is WARNING.
    """
    for severity, pattern in _KEYWORD_PATTERNS:
        if pattern.search(text):
            return severity
    return Severity.WARNING


def alarm_from_text(element_id: str, text: str, timestamp_ms: int = 0) -> Alarm:
    """Build an alarm whose severity is derived from its text."""
    return Alarm(
        element_id=element_id,
        text=text,
        severity=parse_severity(text),
        timestamp_ms=timestamp_ms,
    )


_CRITICAL_TEXT = "Loss of signal - card failure"
_MAJOR_TEXT = "Frame loss detected on line port"


def propagate_fault(
    graph: TopologyGraph, fault_element: str, base_timestamp_ms: int = 0
) -> list[Alarm]:
    """Synthetic alarm cascade for a fault at one element.

    One CRITICAL alarm at the fault itself, then one MAJOR alarm at each
    distinct non-span element strictly downstream of it on every path
    through it, in (path order, route order). Spans never alarm; a span
    fault surfaces only through the cards behind it.
    """
    if fault_element not in graph.elements:
        raise UnknownElementError(f"unknown element {fault_element!r}")
    path_ids = graph.paths_through(fault_element)
    if not path_ids:
        raise NotOnAnyPathError(f"{fault_element!r} lies on no wavelength path")

    alarms = [
        Alarm(fault_element, _CRITICAL_TEXT, Severity.CRITICAL, base_timestamp_ms)
    ]
    seen = {fault_element}
    for pid in path_ids:
        for eid in downstream(graph, fault_element, pid):
            if eid in seen:
                continue
            if graph.elements[eid].kind is ElementKind.FIBER_SPAN:
                continue
            seen.add(eid)
            alarms.append(
                Alarm(eid, _MAJOR_TEXT, Severity.MAJOR, base_timestamp_ms + len(alarms))
            )
    return alarms


def _check_alarms(graph: TopologyGraph, alarms: Sequence[Alarm]) -> None:
    if not alarms:
        raise EmptyAlarmsError("no alarms to localize")
    for alarm in alarms:
        if alarm.element_id not in graph.elements:
            raise UnknownElementError(f"alarm on unknown element {alarm.element_id!r}")


def _candidate_severity(alarms: Sequence[Alarm]) -> dict[str, Severity]:
    """Max severity per alarmed element."""
    worst: dict[str, Severity] = {}
    for alarm in alarms:
        prev = worst.get(alarm.element_id)
        if prev is None or alarm.severity > prev:
            worst[alarm.element_id] = alarm.severity
    return worst


def _cone(graph: TopologyGraph, element_id: str) -> set[str]:
    """The element plus everything strictly downstream of it on its paths."""
    cone = {element_id}
    for pid in graph.paths_through(element_id):
        cone.update(downstream(graph, element_id, pid))
    return cone


def _rank_key(graph: TopologyGraph, scores: dict[str, float]):
    def key(eid: str):
        return (-scores[eid], graph.min_path_position(eid), eid)

    return key


def _explain(
    graph: TopologyGraph,
    alarms: Sequence[Alarm],
    ordered_candidates: Sequence[str],
    cones: dict[str, set[str]],
) -> dict[int, str]:
    explained: dict[int, str] = {}
    for i, alarm in enumerate(alarms):
        for candidate in ordered_candidates:
            if alarm.element_id in cones[candidate]:
                explained[i] = candidate
                break
        # Every alarmed element is itself a candidate, so the loop always hits.
    return explained


def localize(graph: TopologyGraph, alarms: Sequence[Alarm]) -> LocalizationResult:
    """Deterministic coverage-based root-cause ranking.

    Each alarmed element scores by the fraction of alarmed elements inside
    its downstream cone, multiplied by its severity weight. Ties break on
    earliest route position, then id, so results are reproducible under any
    alarm ordering.
    """
    _check_alarms(graph, alarms)
    worst = _candidate_severity(alarms)
    alarmed_ids = set(worst)
    cones = {eid: _cone(graph, eid) for eid in worst}

    scores: dict[str, float] = {}
    for eid in worst:
        coverage = len(alarmed_ids & cones[eid])
        scores[eid] = (coverage / len(alarmed_ids)) * SEVERITY_WEIGHT[worst[eid]]

    ordered = sorted(scores, key=_rank_key(graph, scores))
    return LocalizationResult(
        root_cause_id=ordered[0],
        ranking=tuple((eid, scores[eid]) for eid in ordered),
        explained=_explain(graph, alarms, ordered, cones),
    )


# Fixed message-passing weights: how much of an element's state is retained
# versus pulled from its strongest downstream neighbor each round.
MP_SELF_WEIGHT = 0.6
MP_NEIGHBOR_WEIGHT = 0.4


def localize_mp(
    graph: TopologyGraph, alarms: Sequence[Alarm], iterations: int = 3
) -> LocalizationResult:
    """Fixed-weight message passing against signal flow.

    Every element starts with its normalized alarm severity (0 if silent).
    Each round pulls the strongest downstream state upstream:
    ``state' = 0.6 * state + 0.4 * max(downstream states)``. Alarmed
    elements are then ranked by final state with the same tie-breaking as
    :func:`localize`. States stay within [0, 1] for any iteration count.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    _check_alarms(graph, alarms)
    worst = _candidate_severity(alarms)

    state = {eid: 0.0 for eid in graph.elements}
    for eid, severity in worst.items():
        state[eid] = SEVERITY_WEIGHT[severity]

    for _ in range(iterations):
        nxt = {}
        for eid in graph.elements:
            succ = graph.successors(eid)
            pulled = max((state[s] for s in succ), default=0.0)
            nxt[eid] = MP_SELF_WEIGHT * state[eid] + MP_NEIGHBOR_WEIGHT * pulled
        state = nxt

    scores = {eid: state[eid] for eid in worst}
    ordered = sorted(scores, key=_rank_key(graph, scores))
    cones = {eid: _cone(graph, eid) for eid in worst}
    return LocalizationResult(
        root_cause_id=ordered[0],
        ranking=tuple((eid, scores[eid]) for eid in ordered),
        explained=_explain(graph, alarms, ordered, cones),
    )


def alarms_from_dicts(raw: Iterable[dict]) -> list[Alarm]:
    """Parse alarms from scenario/wire dictionaries.

    Severity falls back to :func:`parse_severity` on the text when absent.
    """
    alarms = []
    for item in raw:
        text = item.get("text", "")
        if "severity" in item:
            severity = Severity[item["severity"]]
        else:
            severity = parse_severity(text)
        alarms.append(
            Alarm(
                element_id=item["element_id"],
                text=text,
                severity=severity,
                timestamp_ms=int(item.get("timestamp_ms", 0)),
            )
        )
    return alarms
