"""Graph and delta interchange round-trips and schema validation."""

import json

import pytest

from deltacommit.cpg import (
    FormatError,
    GraphIntegrityError,
    export_cpg,
    graph_from_dict,
    graph_to_dict,
    import_cpg,
)
from deltacommit.delta import build_delta, delta_from_dict, delta_to_dict

from conftest import cpg, delta_pair
from deltacommit.synthetic import gen_program_text


def valid_doc():
    return {
        "vertices": [
            {"kind": "IDENT", "code": "a", "signature": "S", "ordinal": 0, "line": 1},
            {"kind": "IDENT", "code": "b", "signature": "S", "ordinal": 0, "line": 2},
        ],
        "edges": [{"src_index": 0, "dst_index": 1, "etype": "AST", "label": None}],
    }


class TestRoundTrip:
    def test_build_export_import_identity(self, tmp_path):
        g = cpg("class A { void f(int a) { int x = a; if (x > 0) { x = x + 1; } } }")
        path = tmp_path / "g.json"
        export_cpg(g, path)
        assert import_cpg(path) == g

    def test_randomized_round_trips(self, tmp_path):
        for seed in range(100):
            g = cpg(gen_program_text(seed))
            path = tmp_path / f"g{seed}.json"
            export_cpg(g, path)
            assert import_cpg(path) == g, seed

    def test_empty_graph_accepted(self):
        g = graph_from_dict({"vertices": [], "edges": []})
        assert not g.vertices and not g.edges

    def test_delta_round_trip(self, tmp_path):
        for seed in range(20):
            g1, g2 = delta_pair(seed)
            d = build_delta(g1, g2)
            doc = delta_to_dict(d)
            back = delta_from_dict(json.loads(json.dumps(doc)))
            assert back.added_edges == d.added_edges
            assert back.deleted_edges == d.deleted_edges
            assert back.context_edges == d.context_edges
            assert set(back.added_vertices) == set(d.added_vertices)
            assert set(back.deleted_vertices) == set(d.deleted_vertices)
            assert set(back.context_vertices) == set(d.context_vertices)


class TestValidation:
    def test_dangling_edge_rejected(self):
        doc = valid_doc()
        doc["edges"][0]["dst_index"] = 7
        with pytest.raises(GraphIntegrityError):
            graph_from_dict(doc)

    def test_unknown_vertex_field_rejected(self):
        doc = valid_doc()
        doc["vertices"][0]["colour"] = "red"
        with pytest.raises(FormatError) as exc:
            graph_from_dict(doc)
        assert "vertices[0].colour" in str(exc.value)

    def test_unknown_edge_field_rejected(self):
        doc = valid_doc()
        doc["edges"][0]["weight"] = 3
        with pytest.raises(FormatError):
            graph_from_dict(doc)

    def test_missing_field_rejected(self):
        doc = valid_doc()
        del doc["vertices"][0]["ordinal"]
        with pytest.raises(FormatError) as exc:
            graph_from_dict(doc)
        assert "ordinal" in str(exc.value)

    def test_bad_kind_rejected(self):
        doc = valid_doc()
        doc["vertices"][0]["kind"] = "GADGET"
        with pytest.raises(FormatError):
            graph_from_dict(doc)

    def test_bad_etype_rejected(self):
        doc = valid_doc()
        doc["edges"][0]["etype"] = "DATAFLOW"
        with pytest.raises(FormatError):
            graph_from_dict(doc)

    def test_duplicate_identity_rejected(self):
        doc = valid_doc()
        doc["vertices"][1] = dict(doc["vertices"][0])
        with pytest.raises(GraphIntegrityError):
            graph_from_dict(doc)

    def test_empty_leaf_code_rejected(self):
        doc = valid_doc()
        doc["vertices"][0]["code"] = ""
        with pytest.raises(GraphIntegrityError):
            graph_from_dict(doc)

    def test_self_loop_flow_edge_rejected(self):
        doc = valid_doc()
        doc["edges"][0] = {"src_index": 0, "dst_index": 0, "etype": "CFG", "label": None}
        with pytest.raises(GraphIntegrityError):
            graph_from_dict(doc)

    def test_invalid_json_file(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(FormatError):
            import_cpg(path)

    def test_delta_requires_class_fields(self):
        g1, g2 = delta_pair(1)
        doc = delta_to_dict(build_delta(g1, g2))
        del doc["vertices"][0]["delta_class"]
        with pytest.raises(FormatError):
            delta_from_dict(doc)

    def test_delta_rejects_bad_class(self):
        g1, g2 = delta_pair(1)
        doc = delta_to_dict(build_delta(g1, g2))
        doc["edges"][0]["delta_class"] = "touched"
        with pytest.raises(FormatError):
            delta_from_dict(doc)
