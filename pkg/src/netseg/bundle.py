"""Self-contained explorer bundle: one JSON document the UI consumes.

The bundle carries the network geometry, the trajectories with their cluster
assignments, both cluster hierarchies, crossed matrices for every level pair
and per-cluster summaries. ``schema_version`` starts at 1; loaders must
reject unknown versions. Referential integrity is validated both before
writing and after loading, so a tampered bundle fails with the offending ids
named.
"""

from __future__ import annotations

import json
from dataclasses import asdict
from itertools import product
from pathlib import Path
from typing import Union

from netseg.community import ClusterHierarchy, Partition
from netseg.errors import ValidationError
from netseg.evaluation import (cluster_summary, crossed_matrix,
                               trajectory_cluster_summary)
from netseg.similarity import SimilarityGraph
from netseg.trajectory_store import TrajectoryDataset

SCHEMA_VERSION = 1


def _hierarchy_doc(h: ClusterHierarchy) -> dict:
    parent_of: dict[int, int] = {}
    for node in h.nodes():
        for child in node.children:
            parent_of[child.id] = node.id
    nodes = [
        {
            "id": node.id,
            "parent": parent_of.get(node.id, -1),
            "level": node.level,
            "significant": node.significant,
            "modularity": node.split_modularity,
            "vertex_count": len(node.vertices),
        }
        for node in h.nodes()
    ]
    membership = {}
    for leaf in h.leaves():
        for v in leaf.vertices:
            membership[str(v)] = leaf.id
    return {
        "level1_modularity": h.level1_modularity,
        "max_level": h.max_level,
        "nodes": nodes,
        "membership": membership,
    }


def _cut_partition(h: ClusterHierarchy, level: int) -> tuple[list[int], Partition]:
    cut = h.level_cut(level)
    membership: dict[int, int] = {}
    for index, node in enumerate(cut):
        for v in node.vertices:
            membership[v] = index
    return [node.id for node in cut], Partition(membership=membership, k=len(cut))


def build_bundle(ds: TrajectoryDataset,
                 segment_graph: SimilarityGraph,
                 trajectory_graph: SimilarityGraph,
                 segment_hierarchy: ClusterHierarchy,
                 trajectory_hierarchy: ClusterHierarchy) -> dict:
    """Assemble the bundle document; raises on integrity failures."""
    net = ds.network
    leaf_of_traj: dict[int, int] = {}
    for leaf in trajectory_hierarchy.leaves():
        for tid in leaf.vertices:
            leaf_of_traj[tid] = leaf.id
    trajectories = []
    for tid in sorted(ds.trajectories):
        trajectories.append({
            "id": tid,
            "segments": list(ds.trajectories[tid].segments),
            "leaf_cluster": leaf_of_traj.get(tid),
            "level1_cluster": trajectory_hierarchy.level1_of(tid),
        })

    matrices = []
    t_max = trajectory_hierarchy.max_level
    s_max = segment_hierarchy.max_level
    for t_level, s_level in product(range(1, t_max + 1), range(1, s_max + 1)):
        row_nodes, tp = _cut_partition(trajectory_hierarchy, t_level)
        col_nodes, sp = _cut_partition(segment_hierarchy, s_level)
        cm = crossed_matrix(ds, tp, sp)
        matrices.append({
            "trajectory_level": t_level,
            "segment_level": s_level,
            "rows": row_nodes,
            "cols": col_nodes,
            "row_sizes": cm.row_sizes,
            "col_sizes": cm.col_sizes,
            "counts": cm.counts,
            "densities": cm.densities,
        })

    def summary_doc(summary, level: int) -> dict:
        doc = asdict(summary)
        doc["bbox"] = list(doc["bbox"])  # JSON-native so round trips compare equal
        doc["level"] = level
        return doc

    summaries = {
        "segment": [
            summary_doc(s, level)
            for level in range(1, s_max + 1)
            for s in cluster_summary(ds, segment_graph, segment_hierarchy, level)
        ],
        "trajectory": [
            summary_doc(s, level)
            for level in range(1, t_max + 1)
            for s in trajectory_cluster_summary(ds, trajectory_graph,
                                                trajectory_hierarchy, level)
        ],
    }

    doc = {
        "schema_version": SCHEMA_VERSION,
        "network": {
            "nodes": [
                {"id": n.id, "x": n.x, "y": n.y}
                for n in (net.nodes[i] for i in sorted(net.nodes))
            ],
            "segments": [
                {"id": s.id, "from": s.from_node, "to": s.to_node}
                for s in (net.segments[i] for i in sorted(net.segments))
            ],
        },
        "trajectories": trajectories,
        "segment_hierarchy": _hierarchy_doc(segment_hierarchy),
        "trajectory_hierarchy": _hierarchy_doc(trajectory_hierarchy),
        "crossed_matrices": matrices,
        "summaries": summaries,
    }
    errors = validate_bundle(doc)
    if errors:
        raise ValidationError("bundle failed validation: " + "; ".join(errors))
    return doc


def validate_bundle(doc: dict) -> list[str]:
    """Referential-integrity check; returns a list of error strings."""
    errors: list[str] = []
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        return [f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})"]

    network = doc.get("network", {})
    node_ids = {n["id"] for n in network.get("nodes", [])}
    segment_ids = set()
    for seg in network.get("segments", []):
        segment_ids.add(seg["id"])
        for endpoint in (seg["from"], seg["to"]):
            if endpoint not in node_ids:
                errors.append(f"segment {seg['id']} references unknown node {endpoint}")

    trajectory_ids = set()
    for traj in doc.get("trajectories", []):
        trajectory_ids.add(traj["id"])
        for sid in traj["segments"]:
            if sid not in segment_ids:
                errors.append(f"trajectory {traj['id']} references unknown segment {sid}")

    def check_hierarchy(name: str, hdoc: dict, universe: set[int], kind: str) -> set[int]:
        ids = {n["id"] for n in hdoc.get("nodes", [])}
        for node in hdoc.get("nodes", []):
            parent = node["parent"]
            if parent != -1 and parent not in ids:
                errors.append(f"{name} node {node['id']} references unknown parent {parent}")
            if parent == -1 and node["level"] != 1:
                errors.append(f"{name} root node {node['id']} has level {node['level']}")
        for vertex_str, leaf in hdoc.get("membership", {}).items():
            if leaf not in ids:
                errors.append(f"{name} membership references unknown node {leaf}")
            try:
                vid = int(vertex_str)
            except ValueError:
                errors.append(f"{name} membership has malformed vertex id {vertex_str!r}")
                continue
            if vid not in universe:
                errors.append(f"{name} membership references unknown {kind} {vid}")
        return ids

    seg_nodes = check_hierarchy("segment_hierarchy", doc.get("segment_hierarchy", {}),
                                segment_ids, "segment")
    traj_nodes = check_hierarchy("trajectory_hierarchy", doc.get("trajectory_hierarchy", {}),
                                 trajectory_ids, "trajectory")

    for traj in doc.get("trajectories", []):
        for key in ("leaf_cluster", "level1_cluster"):
            ref = traj.get(key)
            if ref is not None and ref not in traj_nodes:
                errors.append(f"trajectory {traj['id']} {key} references unknown node {ref}")

    for index, cm in enumerate(doc.get("crossed_matrices", [])):
        for node_id in cm.get("rows", []):
            if node_id not in traj_nodes:
                errors.append(f"crossed matrix {index} row references unknown node {node_id}")
        for node_id in cm.get("cols", []):
            if node_id not in seg_nodes:
                errors.append(f"crossed matrix {index} column references unknown node {node_id}")
        rows, cols = len(cm.get("rows", [])), len(cm.get("cols", []))
        for field in ("counts", "densities"):
            grid = cm.get(field, [])
            if len(grid) != rows or any(len(row) != cols for row in grid):
                errors.append(f"crossed matrix {index} {field} shape mismatch")
        for row in cm.get("densities", []):
            for value in row:
                if not 0.0 <= value <= 1.0:
                    errors.append(f"crossed matrix {index} density {value} out of range")

    for kind, node_set in (("segment", seg_nodes), ("trajectory", traj_nodes)):
        for summary in doc.get("summaries", {}).get(kind, []):
            if summary["node_id"] not in node_set:
                errors.append(f"{kind} summary references unknown node {summary['node_id']}")
    return errors


def write_bundle(doc: dict, path: Union[str, Path]) -> None:
    errors = validate_bundle(doc)
    if errors:
        raise ValidationError("bundle failed validation: " + "; ".join(errors))
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_bundle(path: Union[str, Path]) -> dict:
    """Parse and validate a bundle; raises ValidationError naming the ids."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"bundle is not valid JSON: {exc}") from None
    errors = validate_bundle(doc)
    if errors:
        raise ValidationError("bundle failed validation: " + "; ".join(errors))
    return doc
