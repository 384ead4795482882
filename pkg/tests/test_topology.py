from __future__ import annotations

import pytest

from twinops.errors import (
    BrokenRouteError,
    DanglingEdgeError,
    DuplicateIdError,
    MissingLengthError,
    NotOnPathError,
    ScenarioInvalidError,
    UnknownElementError,
    UnknownShelfError,
)
from twinops.topology import (
    Element,
    ElementKind,
    WavelengthPath,
    arrangement_for,
    build_arrangements,
    build_graph,
    downstream,
)

from conftest import make_chain_graph


def _elems(*specs):
    out = []
    for eid, kind in specs:
        out.append(Element(id=eid, kind=kind, model="M", node=eid.split("/")[0]))
    return out


class TestBuildGraph:
    def test_accepts_valid_chain(self, chain):
        graph, route = chain
        assert set(graph.elements) == set(route)
        assert graph.paths["WLC"].route == tuple(route)

    def test_duplicate_element_id_rejected(self):
        elems = _elems(("A/OT", ElementKind.OT), ("A/OT", ElementKind.OT))
        with pytest.raises(DuplicateIdError):
            build_graph(elems, set(), [], {})

    def test_edge_to_unknown_element_rejected(self):
        elems = _elems(("A/OT", ElementKind.OT))
        with pytest.raises(DanglingEdgeError):
            build_graph(elems, {("A/OT", "B/OT")}, [], {})

    def test_self_loop_rejected(self):
        elems = _elems(("A/OT", ElementKind.OT))
        with pytest.raises(DanglingEdgeError):
            build_graph(elems, {("A/OT", "A/OT")}, [], {})

    def test_route_must_be_a_walk_in_edges(self):
        elems = _elems(("A/OT", ElementKind.OT), ("B/OT", ElementKind.OT))
        path = WavelengthPath(id="W", route=("A/OT", "B/OT"))
        with pytest.raises(BrokenRouteError):
            build_graph(elems, set(), [path], {})

    def test_route_must_terminate_at_ot(self):
        elems = _elems(("A/OT", ElementKind.OT), ("B/LA", ElementKind.LA))
        path = WavelengthPath(id="W", route=("A/OT", "B/LA"))
        with pytest.raises(BrokenRouteError):
            build_graph(elems, {("A/OT", "B/LA")}, [path], {})

    def test_span_without_length_rejected(self):
        elems = _elems(("A/OT", ElementKind.OT), ("S1", ElementKind.FIBER_SPAN))
        with pytest.raises(MissingLengthError):
            build_graph(elems, set(), [], {})

    def test_length_on_non_span_rejected(self):
        elems = _elems(("A/OT", ElementKind.OT))
        with pytest.raises(ScenarioInvalidError):
            build_graph(elems, set(), [], {"A/OT": 5.0})

    def test_shelf_without_slot_rejected(self):
        bad = Element(id="A/OT", kind=ElementKind.OT, model="M", node="A", shelf="A/SH1")
        with pytest.raises(ScenarioInvalidError):
            build_graph([bad], set(), [], {})


class TestQueries:
    def test_successors_follow_edges(self, chain):
        graph, route = chain
        for a, b in zip(route, route[1:]):
            assert b in graph.successors(a)
        assert graph.successors(route[-1]) == ()

    def test_unknown_element_raises(self, chain):
        graph, _ = chain
        with pytest.raises(UnknownElementError):
            graph.element("nope")

    def test_downstream_is_strict_suffix(self, chain):
        graph, route = chain
        assert downstream(graph, route[0], "WLC") == route[1:]
        assert downstream(graph, route[-1], "WLC") == []

    def test_downstream_unknown_path(self, chain):
        graph, route = chain
        with pytest.raises(NotOnPathError):
            downstream(graph, route[0], "WLQ")

    def test_route_position_and_min_position(self, chain):
        graph, route = chain
        for i, eid in enumerate(route):
            assert graph.route_position("WLC", eid) == i
            assert graph.min_path_position(eid) == i

    def test_min_position_off_path_is_sentinel(self):
        graph, _ = make_chain_graph(span_after=None)
        lonely = Element(id="Z/LA", kind=ElementKind.LA, model="M", node="Z")
        elems = list(graph.elements.values()) + [lonely]
        g2 = build_graph(elems, graph.edges, graph.paths.values(), graph.fiber_lengths_km)
        assert g2.min_path_position("Z/LA") > 10**6

    def test_paths_through(self, reference_graph):
        assert set(reference_graph.paths_through("TN1/WSS1")) == {"WL1", "WL2"}
        assert reference_graph.paths_through("TN5/WSS1") == ()

    def test_to_dict_round_trip_equality(self, reference_graph):
        raw = reference_graph.to_dict()
        rebuilt = build_graph(
            [
                Element(
                    id=e["id"],
                    kind=ElementKind(e["kind"]),
                    model=e.get("model", ""),
                    node=e.get("node", ""),
                    shelf=e.get("shelf"),
                    slot=e.get("slot"),
                )
                for e in raw["elements"]
            ],
            {tuple(edge) for edge in raw["edges"]},
            [
                WavelengthPath(
                    id=p["id"],
                    route=tuple(p["route"]),
                    line_rate_gbps=p.get("line_rate_gbps", 0.0),
                )
                for p in raw["paths"]
            ],
            raw["fiber_lengths_km"],
        )
        assert rebuilt == reference_graph


class TestArrangements:
    def test_slots_sorted_and_models_exposed(self, reference_graph):
        arrangements = build_arrangements(
            reference_graph,
            {"TN1/SH2": [(2, "TN1/LA2"), (0, "TN1/OT2"), (1, "TN1/LA1")]},
        )
        shelf = arrangements["TN1/SH2"]
        assert [s.slot for s in shelf.slots] == [0, 1, 2]
        assert shelf.models() == ("D5X500Q", "ASWG", "ASWG")

    def test_slot_conflict_rejected(self, reference_graph):
        with pytest.raises(ScenarioInvalidError):
            build_arrangements(
                reference_graph,
                {"TN1/SH2": [(0, "TN1/OT2"), (0, "TN1/LA1")]},
            )

    def test_element_in_two_shelves_rejected(self, reference_graph):
        with pytest.raises(ScenarioInvalidError):
            build_arrangements(
                reference_graph,
                {
                    "X/SH1": [(0, "TN2/LA1")],
                    "X/SH2": [(0, "TN2/LA1")],
                },
            )

    def test_housing_mismatch_rejected(self, reference_graph):
        # TN1/OT2 is pinned to TN1/SH2 slot 0 in the inventory
        with pytest.raises(ScenarioInvalidError):
            build_arrangements(reference_graph, {"TN9/SH1": [(3, "TN1/OT2")]})

    def test_arrangement_for_unknown_shelf(self, reference_bundle):
        with pytest.raises(UnknownShelfError):
            arrangement_for(reference_bundle.arrangements, "TN9/SH9")
