"""Shared-trajectory weighting, cosine similarity and similarity graphs.

A road segment is treated as a bag of the trajectories that visited it. Each
(trajectory, segment) pair carries a tf-idf-like weight: the trajectory's
share of the segment's visits, discounted by how many distinct segments the
trajectory spans (long trajectories are less informative). Segments sharing
at least one positively-weighted trajectory are linked by their cosine
similarity, forming an undirected weighted graph. The dual construction links
trajectories through the segments they share.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Iterator, Union

from netseg.errors import ValidationError
from netseg.trajectory_store import TrajectoryDataset

logger = logging.getLogger(__name__)


@dataclass
class SimilarityGraph:
    """Undirected weighted graph with strictly positive edge weights.

    ``degree[v]`` is the summed weight of v's incident edges and
    ``total_weight`` is half the degree sum (the weighted edge total m).
    Instances are immutable by convention once built.
    """

    vertices: list[int]
    adj: dict[int, dict[int, float]] = field(repr=False)
    degree: dict[int, float] = field(repr=False)
    total_weight: float

    @classmethod
    def from_edges(cls, vertices: Iterable[int],
                   edges: Iterable[tuple[int, int, float]]) -> "SimilarityGraph":
        verts = sorted(set(vertices))
        vset = set(verts)
        adj: dict[int, dict[int, float]] = {v: {} for v in verts}
        normalized: list[tuple[int, int, float]] = []
        for i, j, w in edges:
            if i == j:
                raise ValidationError(f"self-edge on vertex {i}")
            if w <= 0:
                raise ValidationError(f"non-positive weight {w} on edge ({i}, {j})")
            if i not in vset or j not in vset:
                raise ValidationError(f"edge ({i}, {j}) references unknown vertex")
            a, b = (i, j) if i < j else (j, i)
            if b in adj[a]:
                raise ValidationError(f"duplicate edge ({a}, {b})")
            adj[a][b] = w
            adj[b][a] = w
            normalized.append((a, b, w))
        normalized.sort()
        # neighbor maps are kept in ascending key order so iteration is
        # deterministic without re-sorting in the hot paths
        adj = {u: {v: nbrs[v] for v in sorted(nbrs)} for u, nbrs in adj.items()}
        degree = {v: 0.0 for v in verts}
        total = 0.0
        for a, b, w in normalized:
            degree[a] += w
            degree[b] += w
            total += w
        return cls(vertices=verts, adj=adj, degree=degree, total_weight=total)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def edge_count(self) -> int:
        return sum(len(nbrs) for nbrs in self.adj.values()) // 2

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Yield (i, j, weight) with i < j in ascending order."""
        for u in self.vertices:
            for v, w in self.adj[u].items():
                if v > u:
                    yield u, v, w

    def subgraph(self, subset: Iterable[int]) -> "SimilarityGraph":
        """Induced subgraph on ``subset`` (must be existing vertices)."""
        keep = sorted(set(subset))
        kset = set(keep)
        missing = kset.difference(self.adj)
        if missing:
            raise ValidationError(f"unknown vertices in subgraph request: {sorted(missing)}")
        edges = [
            (u, v, w)
            for u in keep
            for v, w in self.adj[u].items()
            if u < v and v in kset
        ]
        return SimilarityGraph.from_edges(keep, edges)


# --- weighting ---------------------------------------------------------------

def _trajectory_idf(ds: TrajectoryDataset, trajectory_id: int) -> float:
    """log(|S| / number of distinct segments the trajectory visits)."""
    distinct = len(ds.distinct_of(trajectory_id))
    return math.log(ds.network.segment_count / distinct)


def segment_weight(ds: TrajectoryDataset, trajectory_id: int, segment_id: int) -> float:
    """Weight of a trajectory in a segment's bag-of-trajectories.

    (visits of the segment by this trajectory / total visits of the segment)
    times log(total segments / distinct segments of the trajectory), natural
    log. Zero when the trajectory never visits the segment, and zero for the
    degenerate case of a never-visited segment.
    """
    if trajectory_id not in ds.trajectories:
        raise ValidationError(f"unknown trajectory id {trajectory_id}")
    if segment_id not in ds.network.segments:
        raise ValidationError(f"unknown segment id {segment_id}")
    n_st = ds.visit_count(segment_id, trajectory_id)
    if n_st == 0:
        return 0.0
    return (n_st / ds.visit_total(segment_id)) * _trajectory_idf(ds, trajectory_id)


def segment_weight_vector(ds: TrajectoryDataset, segment_id: int) -> dict[int, float]:
    """Sparse trajectory -> weight map of one segment; zero entries omitted."""
    if segment_id not in ds.network.segments:
        raise ValidationError(f"unknown segment id {segment_id}")
    counts = ds.inverted_index.get(segment_id)
    if not counts:
        return {}
    total = sum(counts.values())
    vector: dict[int, float] = {}
    for tid in sorted(counts):
        idf = _trajectory_idf(ds, tid)
        if idf > 0.0:
            vector[tid] = (counts[tid] / total) * idf
    return vector


def trajectory_weight_vector(ds: TrajectoryDataset, trajectory_id: int) -> dict[int, float]:
    """Dual sparse segment -> weight map of one trajectory.

    The share of the trajectory's visits spent on the segment, times
    log(number of trajectories / number of distinct trajectories visiting the
    segment).
    """
    traj = ds.trajectories.get(trajectory_id)
    if traj is None:
        raise ValidationError(f"unknown trajectory id {trajectory_id}")
    n = ds.n
    vector: dict[int, float] = {}
    for sid in sorted(ds.distinct_of(trajectory_id)):
        idf = math.log(n / len(ds.visitors(sid)))
        if idf > 0.0:
            count = ds.visit_count(sid, trajectory_id)
            vector[sid] = (count / traj.length) * idf
    return vector


def _cosine(a: dict[int, float], b: dict[int, float]) -> float:
    if not a or not b:
        return 0.0
    if len(b) < len(a):
        a, b = b, a
    dot = 0.0
    for key in sorted(a):
        other = b.get(key)
        if other is not None:
            dot += a[key] * other
    if dot == 0.0:
        return 0.0
    norm_a = math.sqrt(math.fsum(w * w for w in a.values()))
    norm_b = math.sqrt(math.fsum(w * w for w in b.values()))
    return min(dot / (norm_a * norm_b), 1.0)


def segment_similarity(ds: TrajectoryDataset, s_i: int, s_j: int) -> float:
    """Cosine similarity of two segments' trajectory-weight vectors in [0, 1].

    Zero-norm vectors (never-visited segments, or segments visited only by
    trajectories spanning the whole network) compare as 0.
    """
    return _cosine(segment_weight_vector(ds, s_i), segment_weight_vector(ds, s_j))


def trajectory_similarity(ds: TrajectoryDataset, t_i: int, t_j: int) -> float:
    """Cosine similarity of two trajectories' segment-weight vectors."""
    return _cosine(trajectory_weight_vector(ds, t_i), trajectory_weight_vector(ds, t_j))


# --- graph construction ------------------------------------------------------

def build_segment_similarity_graph(ds: TrajectoryDataset) -> SimilarityGraph:
    """Similarity graph over all visited segments.

    An edge exists iff the cosine similarity is positive, i.e. iff at least
    one positively-weighted trajectory crossed both segments. Dot products
    are accumulated per trajectory over its segment pairs, so the cost is
    sum_T |T|^2 instead of the all-pairs bound.
    """
    vertices = ds.visited_segments()
    norm2: dict[int, float] = {v: 0.0 for v in vertices}
    dots: dict[tuple[int, int], float] = {}
    zero_norm = 0
    for tid in sorted(ds.trajectories):
        idf = _trajectory_idf(ds, tid)
        if idf <= 0.0:
            continue
        segs = sorted(ds.distinct_of(tid))
        weights = {s: (ds.visit_count(s, tid) / ds.visit_total(s)) * idf for s in segs}
        for s, w in weights.items():
            norm2[s] += w * w
        for a, b in combinations(segs, 2):
            pair = (a, b)
            dots[pair] = dots.get(pair, 0.0) + weights[a] * weights[b]
    norms = {}
    for v in vertices:
        if norm2[v] > 0.0:
            norms[v] = math.sqrt(norm2[v])
        else:
            zero_norm += 1
    if zero_norm:
        logger.info("%d visited segment(s) have zero-norm weight vectors and stay isolated", zero_norm)
    edges = []
    for (a, b) in sorted(dots):
        dot = dots[(a, b)]
        if dot <= 0.0:
            continue
        edges.append((a, b, min(dot / (norms[a] * norms[b]), 1.0)))
    return SimilarityGraph.from_edges(vertices, edges)


def build_trajectory_similarity_graph(ds: TrajectoryDataset) -> SimilarityGraph:
    """Dual similarity graph over trajectories, linked by shared segments."""
    vertices = sorted(ds.trajectories)
    norm2: dict[int, float] = {v: 0.0 for v in vertices}
    dots: dict[tuple[int, int], float] = {}
    n = ds.n
    lengths = {tid: ds.trajectories[tid].length for tid in vertices}
    for sid in ds.visited_segments():
        counts = ds.inverted_index[sid]
        idf = math.log(n / len(counts))
        if idf <= 0.0:
            continue
        visitors = sorted(counts)
        weights = {t: (counts[t] / lengths[t]) * idf for t in visitors}
        for t, w in weights.items():
            norm2[t] += w * w
        for a, b in combinations(visitors, 2):
            pair = (a, b)
            dots[pair] = dots.get(pair, 0.0) + weights[a] * weights[b]
    norms = {t: math.sqrt(x) for t, x in norm2.items() if x > 0.0}
    edges = []
    for (a, b) in sorted(dots):
        dot = dots[(a, b)]
        if dot <= 0.0:
            continue
        edges.append((a, b, min(dot / (norms[a] * norms[b]), 1.0)))
    return SimilarityGraph.from_edges(vertices, edges)


def unvisited_segments(ds: TrajectoryDataset) -> list[int]:
    """Segments of the network no trajectory visits (excluded from the graph)."""
    return sorted(set(ds.network.segments).difference(ds.inverted_index))


# --- persistence -------------------------------------------------------------

def write_graph(g: SimilarityGraph, edge_path: Union[str, Path],
                vertex_path: Union[str, Path]) -> None:
    """CSV export: edges ``i,j,weight`` with i < j plus a vertex-list sidecar."""
    with open(edge_path, "w") as fh:
        fh.write("i,j,weight\n")
        for i, j, w in g.edges():
            fh.write(f"{i},{j},{w:.9g}\n")
    with open(vertex_path, "w") as fh:
        fh.write("vertex_id\n")
        for v in g.vertices:
            fh.write(f"{v}\n")


def load_graph(edge_path: Union[str, Path], vertex_path: Union[str, Path]) -> SimilarityGraph:
    vertices: list[int] = []
    with open(vertex_path) as fh:
        header = fh.readline().strip()
        if header != "vertex_id":
            raise ValidationError(f"vertex file header must be 'vertex_id', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                vertices.append(int(line))
            except ValueError:
                raise ValidationError(f"vertex file line {lineno}: malformed id {line!r}") from None
    edges: list[tuple[int, int, float]] = []
    with open(edge_path) as fh:
        header = fh.readline().strip()
        if header != "i,j,weight":
            raise ValidationError(f"edge file header must be 'i,j,weight', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValidationError(f"edge file line {lineno}: expected 3 fields")
            try:
                edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise ValidationError(f"edge file line {lineno}: {exc}") from None
    return SimilarityGraph.from_edges(vertices, edges)
