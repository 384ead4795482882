from __future__ import annotations

import copy
import json

import pytest

from twinops import scenario
from twinops.errors import ScenarioInvalidError, UnknownPointError


def minimal_doc() -> dict:
    return {
        "schema_version": 1,
        "name": "mini",
        "elements": [
            {"id": "N1/OTa", "kind": "OT", "model": "D5X500Q", "node": "N1",
             "shelf": "N1/SH1", "slot": 0},
            {"id": "N1/LAx", "kind": "LA", "model": "RA2P", "node": "N1",
             "shelf": "N1/SH1", "slot": 1},
            {"id": "N2/OTb", "kind": "OT", "model": "D5X500Q", "node": "N2"},
        ],
        "edges": [["N1/OTa", "N1/LAx"], ["N1/LAx", "N2/OTb"]],
        "paths": [{"id": "W1", "route": ["N1/OTa", "N1/LAx", "N2/OTb"],
                   "line_rate_gbps": 100.0}],
        "fiber_lengths_km": {},
        "shelves": {"N1/SH1": [[0, "N1/OTa"], [1, "N1/LAx"]]},
        "alarms": [],
        "points": {"HOME": [0.3, 0.4]},
        "frames": {"cam0": "N1/SH1"},
    }


def write_doc(tmp_path, doc, name="scn.json") -> str:
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def write_envmap(tmp_path, name="env.json") -> str:
    doc = {
        "resolution_m": 0.5,
        "dims": [8, 6, 4],
        "origin_m": [0.0, 0.0, 0.0],
        "occupied": [[3, 2, 0], [3, 2, 1]],
    }
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return name


class TestReferenceScenario:
    def test_inventory_round_numbers(self, reference_bundle):
        b = reference_bundle
        assert len(b.graph.elements) == 29
        assert sorted(b.graph.paths) == ["WL1", "WL2"]
        assert len(b.alarms) == 3
        assert set(b.frames) == {"shelf2-cam"}
        assert b.frames["shelf2-cam"] == "TN1/SH2"
        assert {"P1", "P2", "P3", "P4"} <= set(b.points)

    def test_qos_defaults(self, reference_bundle):
        qos = reference_bundle.qos
        assert qos is not None
        ids = [f.flow_id for f in qos.flows]
        assert ids == ["ar1", "cbr1"]
        assert qos.meter.enabled is True
        assert qos.meter.cbr_cap_gbps == 90.0
        assert qos.duration_s == 10.0

    def test_grids_are_cached(self, reference_bundle):
        assert reference_bundle.grid3d() is reference_bundle.grid3d()
        assert reference_bundle.nav_grid() is reference_bundle.nav_grid()

    def test_point_cell(self, reference_bundle):
        cell = reference_bundle.point_cell("P1")
        assert reference_bundle.nav_grid().in_bounds(cell)
        assert not reference_bundle.nav_grid().is_blocked(cell)
        with pytest.raises(UnknownPointError):
            reference_bundle.point_cell("P99")

    def test_frame_arrangement(self, reference_bundle):
        arr = reference_bundle.frame_arrangement("shelf2-cam")
        assert arr.shelf_id == "TN1/SH2"
        with pytest.raises(ScenarioInvalidError):
            reference_bundle.frame_arrangement("no-such-cam")

    def test_public_dict_is_json_ready(self, reference_bundle):
        doc = reference_bundle.to_public_dict()
        text = json.dumps(doc)
        back = json.loads(text)
        assert back["name"] == reference_bundle.name
        assert len(back["topology"]["elements"]) == 29
        assert back["nav"]["slab_m"] == [0.1, 1.8]
        assert back["nav"]["blocked"] == sorted(back["nav"]["blocked"])
        assert back["shelves"]["TN1/SH2"][0][0] == 0


class TestLoadValidation:
    def test_minimal_doc_loads(self, tmp_path):
        bundle = scenario.load(write_doc(tmp_path, minimal_doc()))
        assert bundle.name == "mini"
        assert bundle.qos is None
        with pytest.raises(ScenarioInvalidError):
            bundle.nav_grid()

    def test_missing_file_is_oserror(self, tmp_path):
        with pytest.raises(OSError):
            scenario.load(str(tmp_path / "absent.json"))

    def test_not_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{nope")
        with pytest.raises(ScenarioInvalidError):
            scenario.load(str(p))

    def test_root_not_object(self, tmp_path):
        p = tmp_path / "arr.json"
        p.write_text("[1, 2]")
        with pytest.raises(ScenarioInvalidError):
            scenario.load(str(p))

    def test_wrong_schema_version(self, tmp_path):
        doc = minimal_doc()
        doc["schema_version"] = 999
        with pytest.raises(ScenarioInvalidError):
            scenario.load(write_doc(tmp_path, doc))

    def test_alarm_on_unknown_element(self, tmp_path):
        doc = minimal_doc()
        doc["alarms"] = [
            {"element_id": "GHOST", "severity": "MAJOR", "message": "x", "ts_ms": 0}
        ]
        with pytest.raises(ScenarioInvalidError):
            scenario.load(write_doc(tmp_path, doc))

    def test_frame_to_unknown_shelf(self, tmp_path):
        doc = minimal_doc()
        doc["frames"] = {"cam0": "NO/SHELF"}
        with pytest.raises(ScenarioInvalidError):
            scenario.load(write_doc(tmp_path, doc))

    def test_dangling_edge_wrapped(self, tmp_path):
        doc = minimal_doc()
        doc["edges"].append(["N1/OTa", "GHOST"])
        with pytest.raises(ScenarioInvalidError):
            scenario.load(write_doc(tmp_path, doc))

    def test_bad_point_shape(self, tmp_path):
        doc = minimal_doc()
        doc["points"] = {"HOME": [1.0]}
        with pytest.raises(ScenarioInvalidError):
            scenario.load(write_doc(tmp_path, doc))

    def test_nav_requires_envmap_key(self, tmp_path):
        doc = minimal_doc()
        doc["nav"] = {"slab_m": [0.1, 1.8]}
        with pytest.raises(ScenarioInvalidError):
            scenario.load(write_doc(tmp_path, doc))

    def test_nav_envmap_must_exist(self, tmp_path):
        doc = minimal_doc()
        doc["nav"] = {"envmap": "missing.json"}
        with pytest.raises(ScenarioInvalidError):
            scenario.load(write_doc(tmp_path, doc))

    def test_nav_slab_ordering(self, tmp_path):
        doc = minimal_doc()
        doc["nav"] = {"envmap": write_envmap(tmp_path), "slab_m": [1.8, 0.1]}
        with pytest.raises(ScenarioInvalidError):
            scenario.load(write_doc(tmp_path, doc))

    def test_nav_section_loads_and_projects(self, tmp_path):
        doc = minimal_doc()
        doc["nav"] = {"envmap": write_envmap(tmp_path), "slab_m": [0.0, 1.0]}
        bundle = scenario.load(write_doc(tmp_path, doc))
        grid = bundle.nav_grid()
        assert grid.dims == (8, 6)
        assert grid.is_blocked((3, 2))
        assert bundle.point_cell("HOME") == (0, 0)

    def test_corrupt_envmap_reported_lazily(self, tmp_path):
        doc = minimal_doc()
        name = "env.json"
        (tmp_path / name).write_text("{broken")
        doc["nav"] = {"envmap": name}
        bundle = scenario.load(write_doc(tmp_path, doc))
        with pytest.raises(ScenarioInvalidError):
            bundle.grid3d()

    def test_bad_qos_section(self, tmp_path):
        doc = minimal_doc()
        doc["qos"] = {"flows": [{"class": "AR", "offered_gbps": 1.0}]}
        with pytest.raises(ScenarioInvalidError):
            scenario.load(write_doc(tmp_path, doc))

    def test_qos_offered_must_be_finite(self, tmp_path):
        doc = minimal_doc()
        doc["qos"] = {
            "flows": [{"flow_id": "f", "class": "AR", "offered_gbps": 1e400}]
        }
        with pytest.raises(ScenarioInvalidError):
            scenario.load(write_doc(tmp_path, doc))

    def test_deep_copy_of_template_never_mutates(self, tmp_path):
        # guard against the template helpers sharing state between tests
        a = minimal_doc()
        b = copy.deepcopy(a)
        a["elements"].clear()
        assert b["elements"]
