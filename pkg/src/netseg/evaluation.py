"""Partition quality, the trajectory x segment crossed matrix, and cluster
summaries for reports.

The quality of a segment partition sums, per cluster, the shared-over-union
trajectory counts of its segment pairs, normalized by cluster size. Pairs are
unordered and exclude self-pairs; this convention is fixed here once
(PAIR_CONVENTION) and used for every compared algorithm, so cross-method
comparisons are unaffected by the choice.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import combinations
from math import comb
from pathlib import Path
from typing import Union

from netseg.community import ClusterHierarchy, Partition
from netseg.errors import ValidationError
from netseg.similarity import SimilarityGraph
from netseg.trajectory_store import TrajectoryDataset

logger = logging.getLogger(__name__)

#: Eq-style pair convention used throughout: unordered pairs, i != j.
PAIR_CONVENTION = "unordered-distinct"


@dataclass(frozen=True)
class QualityReport:
    total: float
    per_cluster: dict[int, float]
    k: int


def partition_quality(ds: TrajectoryDataset, p: Partition) -> QualityReport:
    """Shared-over-union pairwise quality of a segment partition.

    Per cluster C: (1/|C|) * sum over unordered segment pairs of
    |{T visiting both}| / |{T visiting either}|; the report's total is the
    sum over clusters.
    """
    per_cluster: dict[int, float] = {}
    for index, members in enumerate(p.communities()):
        for s in members:
            if s not in ds.network.segments:
                raise ValidationError(f"cluster {index} contains unknown segment {s}")
        score = 0.0
        visitor_sets = [ds.visitors(s) for s in members]
        for a, b in combinations(range(len(members)), 2):
            va, vb = visitor_sets[a], visitor_sets[b]
            shared = len(va & vb)
            if shared == 0:
                continue  # contributes 0; also covers the empty-union case
            union = len(va) + len(vb) - shared
            score += shared / union
        per_cluster[index] = score / len(members) if members else 0.0
    total = sum(per_cluster[c] for c in sorted(per_cluster))
    return QualityReport(total=total, per_cluster=per_cluster, k=p.k)


@dataclass(frozen=True)
class CrossedMatrix:
    """Trajectory-cluster x segment-cluster interaction counts and densities.

    ``counts[r][c]`` is the number of (trajectory, segment) pairs where the
    trajectory belongs to row cluster r, the segment to column cluster c, and
    the trajectory visits the segment (distinct segments; repeat visits count
    once). ``densities[r][c]`` divides by |r| * |c|.
    """

    row_ids: list[int]
    col_ids: list[int]
    row_sizes: list[int]
    col_sizes: list[int]
    counts: list[list[int]]
    densities: list[list[float]]


def crossed_matrix(ds: TrajectoryDataset, tp: Partition, sp: Partition) -> CrossedMatrix:
    """Cross the clusters of a trajectory partition and a segment partition."""
    for tid in tp.membership:
        if tid not in ds.trajectories:
            raise ValidationError(f"trajectory partition references unknown trajectory {tid}")
    for sid in sp.membership:
        if sid not in ds.network.segments:
            raise ValidationError(f"segment partition references unknown segment {sid}")
    row_sizes = [0] * tp.k
    col_sizes = [0] * sp.k
    for tid in tp.membership:
        row_sizes[tp.membership[tid]] += 1
    for sid in sp.membership:
        col_sizes[sp.membership[sid]] += 1
    counts = [[0] * sp.k for _ in range(tp.k)]
    for tid in sorted(tp.membership):
        r = tp.membership[tid]
        for sid in ds.distinct_of(tid):
            c = sp.membership.get(sid)
            if c is not None:
                counts[r][c] += 1
    densities = [
        [counts[r][c] / (row_sizes[r] * col_sizes[c]) for c in range(sp.k)]
        for r in range(tp.k)
    ]
    return CrossedMatrix(
        row_ids=list(range(tp.k)),
        col_ids=list(range(sp.k)),
        row_sizes=row_sizes,
        col_sizes=col_sizes,
        counts=counts,
        densities=densities,
    )


@dataclass(frozen=True)
class ClusterSummary:
    node_id: int
    size: int
    visitor_count: int
    internal_weight: float
    bbox: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax


def _segment_bbox(ds: TrajectoryDataset, segment_ids) -> tuple[float, float, float, float]:
    xs: list[float] = []
    ys: list[float] = []
    for sid in segment_ids:
        seg = ds.network.segments[sid]
        for nid in (seg.from_node, seg.to_node):
            node = ds.network.nodes[nid]
            xs.append(node.x)
            ys.append(node.y)
    return (min(xs), min(ys), max(xs), max(ys))


def _internal_weight(g: SimilarityGraph, members: tuple[int, ...]) -> float:
    mset = set(members)
    return sum(
        w
        for u in members
        for v, w in g.adj[u].items()
        if u < v and v in mset
    )


def cluster_summary(ds: TrajectoryDataset, g: SimilarityGraph,
                    hierarchy: ClusterHierarchy, level: int) -> list[ClusterSummary]:
    """Per-cluster record list for a segment hierarchy level: member count,
    distinct visiting trajectories, internal edge weight and the bounding box
    of the member segments' endpoints."""
    summaries = []
    for node in hierarchy.level_cut(level):
        visitors: set[int] = set()
        for sid in node.vertices:
            visitors.update(ds.visitors(sid))
        summaries.append(ClusterSummary(
            node_id=node.id,
            size=len(node.vertices),
            visitor_count=len(visitors),
            internal_weight=_internal_weight(g, node.vertices),
            bbox=_segment_bbox(ds, node.vertices),
        ))
    return summaries


def trajectory_cluster_summary(ds: TrajectoryDataset, g: SimilarityGraph,
                               hierarchy: ClusterHierarchy, level: int) -> list[ClusterSummary]:
    """Dual of cluster_summary for trajectory hierarchies: visitor_count is
    the number of distinct segments the member trajectories cover."""
    summaries = []
    for node in hierarchy.level_cut(level):
        segments: set[int] = set()
        for tid in node.vertices:
            segments.update(ds.distinct_of(tid))
        summaries.append(ClusterSummary(
            node_id=node.id,
            size=len(node.vertices),
            visitor_count=len(segments),
            internal_weight=_internal_weight(g, node.vertices),
            bbox=_segment_bbox(ds, sorted(segments)),
        ))
    return summaries


def adjusted_rand_index(labels_a: dict[int, int], labels_b: dict[int, int]) -> float:
    """Adjusted Rand index between two labelings of the same id set."""
    if set(labels_a) != set(labels_b):
        raise ValidationError("labelings cover different id sets")
    n = len(labels_a)
    if n <= 1:
        return 1.0
    contingency: dict[tuple[int, int], int] = {}
    count_a: dict[int, int] = {}
    count_b: dict[int, int] = {}
    for key in labels_a:
        a, b = labels_a[key], labels_b[key]
        contingency[(a, b)] = contingency.get((a, b), 0) + 1
        count_a[a] = count_a.get(a, 0) + 1
        count_b[b] = count_b.get(b, 0) + 1
    sum_cells = sum(comb(c, 2) for c in contingency.values())
    sum_a = sum(comb(c, 2) for c in count_a.values())
    sum_b = sum(comb(c, 2) for c in count_b.values())
    pairs = comb(n, 2)
    expected = sum_a * sum_b / pairs
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        return 1.0
    return (sum_cells - expected) / (maximum - expected)


# --- persistence -------------------------------------------------------------

def write_quality(report: QualityReport, path: Union[str, Path]) -> None:
    """CSV export: one row per cluster plus a final total row."""
    with open(path, "w") as fh:
        fh.write("cluster,quality\n")
        for c in sorted(report.per_cluster):
            fh.write(f"{c},{report.per_cluster[c]:.9g}\n")
        fh.write(f"total,{report.total:.9g}\n")


def write_crossed_matrix(cm: CrossedMatrix, counts_path: Union[str, Path],
                         densities_path: Union[str, Path]) -> None:
    """CSV exports with a header row of segment-cluster ids."""
    header = "trajectory_cluster," + ",".join(str(c) for c in cm.col_ids)
    with open(counts_path, "w") as fh:
        fh.write(header + "\n")
        for r, row in zip(cm.row_ids, cm.counts):
            fh.write(f"{r}," + ",".join(str(x) for x in row) + "\n")
    with open(densities_path, "w") as fh:
        fh.write(header + "\n")
        for r, row in zip(cm.row_ids, cm.densities):
            fh.write(f"{r}," + ",".join(f"{x:.9g}" for x in row) + "\n")
