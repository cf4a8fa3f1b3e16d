import json

import pytest

from netseg.bundle import (SCHEMA_VERSION, build_bundle, load_bundle,
                           validate_bundle, write_bundle)
from netseg.community import NullModelConfig, hierarchical_cluster
from netseg.errors import ValidationError
from netseg.similarity import (build_segment_similarity_graph,
                               build_trajectory_similarity_graph)

from helpers import hub_fixture


@pytest.fixture(scope="module")
def hub_bundle():
    ds, _tp, _sp, hub_segments = hub_fixture()
    seg_graph = build_segment_similarity_graph(ds)
    traj_graph = build_trajectory_similarity_graph(ds)
    seg_h = hierarchical_cluster(seg_graph, NullModelConfig(seed=42), seed=0)
    traj_h = hierarchical_cluster(traj_graph, NullModelConfig(seed=43), seed=0)
    doc = build_bundle(ds, seg_graph, traj_graph, seg_h, traj_h)
    return doc, ds, seg_h, traj_h, hub_segments


def test_bundle_validates_and_round_trips(hub_bundle, tmp_path):
    doc, *_ = hub_bundle
    assert validate_bundle(doc) == []
    path = tmp_path / "bundle.json"
    write_bundle(doc, path)
    assert load_bundle(path) == doc


def test_bundle_schema_version_rejected(hub_bundle, tmp_path):
    doc, *_ = hub_bundle
    bad = dict(doc, schema_version=99)
    errors = validate_bundle(bad)
    assert errors and "schema_version" in errors[0]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    with pytest.raises(ValidationError, match="schema_version"):
        load_bundle(path)
    assert SCHEMA_VERSION == 1


def test_bundle_dangling_membership_named(hub_bundle):
    doc, *_ = hub_bundle
    tampered = json.loads(json.dumps(doc))
    tampered["segment_hierarchy"]["membership"]["31337"] = 1
    errors = validate_bundle(tampered)
    assert any("31337" in e for e in errors)


def test_bundle_dangling_parent_named(hub_bundle):
    doc, *_ = hub_bundle
    tampered = json.loads(json.dumps(doc))
    tampered["trajectory_hierarchy"]["nodes"][1]["parent"] = 777
    errors = validate_bundle(tampered)
    assert any("777" in e for e in errors)


def test_bundle_density_range_checked(hub_bundle):
    doc, *_ = hub_bundle
    tampered = json.loads(json.dumps(doc))
    tampered["crossed_matrices"][0]["densities"][0][0] = 3.5
    errors = validate_bundle(tampered)
    assert any("out of range" in e for e in errors)


def test_bundle_contains_level_pairs_and_hub_column(hub_bundle):
    doc, ds, seg_h, traj_h, hub_segments = hub_bundle
    pairs = {(m["trajectory_level"], m["segment_level"]) for m in doc["crossed_matrices"]}
    assert pairs == {(t, s) for t in range(1, traj_h.max_level + 1)
                     for s in range(1, seg_h.max_level + 1)}
    # the level-2 x level-2 view shows the hub pattern
    view = next(m for m in doc["crossed_matrices"]
                if m["trajectory_level"] == 2 and m["segment_level"] == 2)
    cut = {node.id: set(node.vertices) for node in seg_h.level_cut(2)}
    hub_cols = [i for i, node_id in enumerate(view["cols"])
                if cut[node_id] & hub_segments]
    assert len(hub_cols) == 1
    column = [row[hub_cols[0]] for row in view["counts"]]
    assert sum(1 for c in column if c > 0) == 2


def test_bundle_trajectory_records(hub_bundle):
    doc, ds, _seg_h, traj_h, _ = hub_bundle
    assert len(doc["trajectories"]) == ds.n
    leaf_ids = {n.id for n in traj_h.leaves()}
    root_ids = {n.id for n in traj_h.roots}
    for record in doc["trajectories"]:
        assert record["leaf_cluster"] in leaf_ids
        assert record["level1_cluster"] in root_ids
        assert tuple(record["segments"]) == ds.trajectories[record["id"]].segments


def test_bundle_summaries_reference_nodes(hub_bundle):
    doc, *_ = hub_bundle
    seg_nodes = {n["id"] for n in doc["segment_hierarchy"]["nodes"]}
    for summary in doc["summaries"]["segment"]:
        assert summary["node_id"] in seg_nodes
        assert summary["size"] >= 1
        xmin, ymin, xmax, ymax = summary["bbox"]
        assert xmin <= xmax and ymin <= ymax
