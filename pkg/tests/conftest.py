from __future__ import annotations

import pathlib

import pytest

from twinops import scenario
from twinops.topology import (
    Element,
    ElementKind,
    WavelengthPath,
    build_arrangements,
    build_graph,
)

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIO_PATH = REPO_ROOT / "scenarios" / "reference.json"


@pytest.fixture(scope="session")
def reference_bundle():
    return scenario.load(str(SCENARIO_PATH))


@pytest.fixture(scope="session")
def reference_graph(reference_bundle):
    return reference_bundle.graph


def make_chain_graph(n_cards: int = 4, span_after: int | None = 1):
    """Single path OT -> ... -> OT with an optional span inserted.

    Returns (graph, route) for tests that want a tiny known topology.
    """
    kinds = [ElementKind.OT]
    kinds += [ElementKind.LA] * (n_cards - 2)
    kinds += [ElementKind.OT]
    elements = []
    route = []
    for i, kind in enumerate(kinds):
        eid = f"C{i}/{kind.value}"
        elements.append(Element(id=eid, kind=kind, model="M", node=f"C{i}"))
        route.append(eid)
    lengths = {}
    if span_after is not None:
        span = Element(
            id="C-SPAN", kind=ElementKind.FIBER_SPAN, model="", node=""
        )
        elements.append(span)
        route.insert(span_after + 1, "C-SPAN")
        lengths["C-SPAN"] = 10.0
    edges = set(zip(route, route[1:]))
    graph = build_graph(
        elements,
        edges,
        [WavelengthPath(id="WLC", route=tuple(route), line_rate_gbps=100.0)],
        lengths,
    )
    return graph, route


@pytest.fixture
def chain():
    return make_chain_graph()


def frame_layouts(bundle) -> dict:
    """frame id -> arrangement, the mapping a detector consumes."""
    return {f: bundle.frame_arrangement(f) for f in bundle.frames}


def make_shelf(models: list[str], shelf_id: str = "NX/SH1"):
    """Arrangement whose slot s holds a card of models[s]."""
    elements = [
        Element(
            id=f"NX/E{i}",
            kind=ElementKind.LA,
            model=m,
            node="NX",
            shelf=shelf_id,
            slot=i,
        )
        for i, m in enumerate(models)
    ]
    graph = build_graph(elements, set(), [], {})
    arrangements = build_arrangements(
        graph, {shelf_id: [(i, f"NX/E{i}") for i in range(len(models))]}
    )
    return arrangements[shelf_id]
