"""Shared fixtures and brute-force oracles used across the test suite."""

from __future__ import annotations

import math
import random
from itertools import combinations
from pathlib import Path

import numpy as np

from netseg.community import Partition, modularity
from netseg.road_network import RoadNetwork, build_network
from netseg.similarity import SimilarityGraph, segment_weight
from netseg.trajectory_store import Trajectory, TrajectoryDataset


# --- networks -----------------------------------------------------------------

def grid_network(width: int, height: int | None = None) -> RoadNetwork:
    """Rectangular grid with a bidirectional segment pair per adjacency."""
    height = width if height is None else height
    nodes = [(y * width + x, float(x), float(y))
             for y in range(height) for x in range(width)]
    segs = []
    sid = 0
    for y in range(height):
        for x in range(width):
            u = y * width + x
            if x + 1 < width:
                segs.append((sid, u, u + 1)); sid += 1
                segs.append((sid, u + 1, u)); sid += 1
            if y + 1 < height:
                segs.append((sid, u, u + width)); sid += 1
                segs.append((sid, u + width, u)); sid += 1
    return build_network(nodes, segs)


def write_grid_csvs(directory: Path, width: int, height: int | None = None) -> tuple[Path, Path]:
    net = grid_network(width, height)
    nodes_path = directory / "nodes.csv"
    segments_path = directory / "segments.csv"
    with open(nodes_path, "w") as fh:
        fh.write("node_id,x,y\n")
        for nid in sorted(net.nodes):
            n = net.nodes[nid]
            fh.write(f"{n.id},{n.x:g},{n.y:g}\n")
    with open(segments_path, "w") as fh:
        fh.write("segment_id,from_node,to_node\n")
        for sid in sorted(net.segments):
            s = net.segments[sid]
            fh.write(f"{s.id},{s.from_node},{s.to_node}\n")
    return nodes_path, segments_path


def chain_network(length: int) -> RoadNetwork:
    """One-way chain: node i -> i+1 via segment i."""
    nodes = [(i, float(i), 0.0) for i in range(length + 1)]
    segs = [(i, i, i + 1) for i in range(length)]
    return build_network(nodes, segs)


def five_region_network(grid: int = 10, n_bridges: int = 4) -> RoadNetwork:
    """Five grid regions in a ring, weakly connected by a few spread-out
    bidirectional bridges per adjacent pair. Region r owns node ids
    [r*grid*grid, (r+1)*grid*grid)."""
    nodes, segs = [], []
    sid = 0

    def add_grid(base: int, ox: float, oy: float) -> None:
        nonlocal sid
        for y in range(grid):
            for x in range(grid):
                nodes.append((base + y * grid + x, ox + x, oy + y))
        for y in range(grid):
            for x in range(grid):
                u = base + y * grid + x
                if x + 1 < grid:
                    segs.append((sid, u, u + 1)); sid += 1
                    segs.append((sid, u + 1, u)); sid += 1
                if y + 1 < grid:
                    segs.append((sid, u, u + grid)); sid += 1
                    segs.append((sid, u + grid, u)); sid += 1

    offsets = [(0, 0), (grid * 2, 0), (grid * 4, 0), (grid, grid * 2), (grid * 3, grid * 2)]
    for r, (ox, oy) in enumerate(offsets):
        add_grid(r * grid * grid, float(ox), float(oy))
    for r in range(5):
        nxt = (r + 1) % 5
        for b in range(n_bridges):
            row = (b * grid) // n_bridges
            a = r * grid * grid + row * grid + (grid - 1)
            c = nxt * grid * grid + row * grid
            segs.append((sid, a, c)); sid += 1
            segs.append((sid, c, a)); sid += 1
    return build_network(nodes, segs)


def region_of(node_id: int, grid: int = 10) -> int:
    return node_id // (grid * grid)


def disconnected_regions_network(grid: int = 4, regions: int = 3) -> RoadNetwork:
    """Mutually unreachable grid regions (no bridges at all)."""
    nodes, segs = [], []
    sid = 0
    for r in range(regions):
        base = r * grid * grid
        for y in range(grid):
            for x in range(grid):
                nodes.append((base + y * grid + x, float(x + r * (grid + 2)), float(y)))
        for y in range(grid):
            for x in range(grid):
                u = base + y * grid + x
                if x + 1 < grid:
                    segs.append((sid, u, u + 1)); sid += 1
                    segs.append((sid, u + 1, u)); sid += 1
                if y + 1 < grid:
                    segs.append((sid, u, u + grid)); sid += 1
                    segs.append((sid, u + grid, u)); sid += 1
    return build_network(nodes, segs)


# --- graphs --------------------------------------------------------------------

def two_triangle_graph() -> SimilarityGraph:
    """Two unit-weight triangles joined by one bridge edge (6 vertices)."""
    edges = [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0),
             (2, 3, 1.0),
             (3, 4, 1.0), (3, 5, 1.0), (4, 5, 1.0)]
    return SimilarityGraph.from_edges(range(6), edges)


def clique_edges(vertices: list[int], weight: float = 1.0) -> list[tuple[int, int, float]]:
    return [(a, b, weight) for a, b in combinations(vertices, 2)]


def two_cliques_graph(size: int = 6, bridge_weight: float = 1.0) -> SimilarityGraph:
    a = list(range(size))
    b = list(range(size, 2 * size))
    edges = clique_edges(a) + clique_edges(b) + [(a[0], b[0], bridge_weight)]
    return SimilarityGraph.from_edges(range(2 * size), edges)


def four_clique_pairs_graph() -> SimilarityGraph:
    """Four 8-vertex cliques as two weakly-linked pairs: complete bipartite
    coupling of total weight 20 inside each pair, one 0.1 edge across pairs.
    Level 1 merges each pair; level 2 splits the pairs into their cliques."""
    cliques = [list(range(i * 8, (i + 1) * 8)) for i in range(4)]
    edges = []
    for members in cliques:
        edges += clique_edges(members)
    within = 20.0 / 64.0
    for a, b in ((0, 1), (2, 3)):
        edges += [(u, v, within) for u in cliques[a] for v in cliques[b]]
    edges.append((cliques[0][0], cliques[2][0], 0.1))
    return SimilarityGraph.from_edges(range(32), edges)


def random_similarity_graph(rng: random.Random, n: int, p: float = 0.4) -> SimilarityGraph:
    vertices = list(range(n))
    edges = []
    for a, b in combinations(vertices, 2):
        if rng.random() < p:
            edges.append((a, b, rng.uniform(0.05, 1.0)))
    return SimilarityGraph.from_edges(vertices, edges)


# --- datasets ------------------------------------------------------------------

def random_dataset(rng: random.Random, n_segments: int = 40,
                   n_trajectories: int = 8, max_len: int = 12) -> TrajectoryDataset:
    """Random-walk trajectories over a random sparsely connected network."""
    n_nodes = max(4, n_segments // 2)
    nodes = [(i, rng.uniform(0, 10), rng.uniform(0, 10)) for i in range(n_nodes)]
    segs = []
    for sid in range(n_segments):
        u = rng.randrange(n_nodes)
        v = rng.randrange(n_nodes)
        while v == u:
            v = rng.randrange(n_nodes)
        segs.append((sid, u, v))
    net = build_network(nodes, segs)
    trajectories = []
    for tid in range(n_trajectories):
        # start from a random segment and follow random successors
        path = [rng.randrange(n_segments)]
        for _ in range(rng.randint(0, max_len - 1)):
            nxt = net.successors(path[-1])
            if not nxt:
                break
            path.append(rng.choice(nxt))
        trajectories.append(Trajectory(tid, tuple(path)))
    return TrajectoryDataset(net, trajectories)


def hub_fixture() -> tuple[TrajectoryDataset, Partition, Partition, set[int]]:
    """Dataset with five trajectory groups where one segment corridor (the
    hub) is traversed by exactly two of them, plus a three-branch star group
    that subdivides three ways. Returns (dataset, planted trajectory
    partition, planted segment partition, hub segment ids)."""
    nodes, segs = [], []
    sid = 0
    nid = 0

    def corridor(length: int, from_node: int | None = None) -> tuple[list[int], int, int]:
        nonlocal sid, nid
        ids = []
        if from_node is None:
            nodes.append((nid, float(nid % 13), float(nid // 13)))
            start = nid
            nid += 1
        else:
            start = from_node
        prev = start
        for _ in range(length):
            nodes.append((nid, float(nid % 13), float(nid // 13)))
            segs.append((sid, prev, nid))
            ids.append(sid)
            prev = nid
            nid += 1
            sid += 1
        return ids, start, prev

    seg_a, _, a_end = corridor(10)
    seg_b, _, b_end = corridor(10)
    seg_h, h_start, _ = corridor(6)
    seg_c, _, _ = corridor(8)
    seg_d, _, _ = corridor(8)
    seg_e, _, _ = corridor(8)
    segs.append((sid, a_end, h_start)); conn_a = sid; sid += 1
    segs.append((sid, b_end, h_start)); conn_b = sid; sid += 1
    seg_stem, _, stem_end = corridor(3)
    seg_f1, _, _ = corridor(8, from_node=stem_end)
    seg_f2, _, _ = corridor(8, from_node=stem_end)
    seg_f3, _, _ = corridor(8, from_node=stem_end)
    net = build_network(nodes, segs)

    trajectories = []
    truth: dict[int, int] = {}
    tid = 0

    def add(cluster: int, path: list[int], count: int) -> None:
        nonlocal tid
        for _ in range(count):
            trajectories.append(Trajectory(tid, tuple(path)))
            truth[tid] = cluster
            tid += 1

    add(0, seg_a + [conn_a] + seg_h, 4)  # A commuters through the hub
    add(0, seg_a, 4)                     # A locals
    add(1, seg_b + [conn_b] + seg_h, 4)
    add(1, seg_b, 4)
    add(2, seg_c, 6)
    add(3, seg_d, 6)
    add(4, seg_e, 6)
    add(5, seg_stem + seg_f1, 4)
    add(5, seg_stem + seg_f2, 4)
    add(5, seg_stem + seg_f3, 4)
    ds = TrajectoryDataset(net, trajectories, ground_truth=truth)

    segment_labels: dict[int, int] = {}
    groups = [seg_a + [conn_a], seg_b + [conn_b], seg_h, seg_c, seg_d, seg_e,
              seg_stem + seg_f1 + seg_f2 + seg_f3]
    for label, group in enumerate(groups):
        for s in group:
            segment_labels[s] = label
    return (ds, Partition.from_labels(truth),
            Partition.from_labels(segment_labels), set(seg_h))


def write_dataset_csvs(directory: Path, ds: TrajectoryDataset) -> tuple[Path, Path, Path]:
    """Write a dataset's network and trajectories in the CLI file formats."""
    from netseg.road_network import write_network
    from netseg.trajectory_store import write_trajectories

    directory.mkdir(parents=True, exist_ok=True)
    nodes_path = directory / "nodes.csv"
    segments_path = directory / "segments.csv"
    trajectories_path = directory / "trajectories.csv"
    write_network(ds.network, nodes_path, segments_path)
    write_trajectories(ds, trajectories_path)
    return nodes_path, segments_path, trajectories_path


# --- oracles -------------------------------------------------------------------

def set_partitions(items: list[int]):
    """Enumerate all set partitions (Bell-number many)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for smaller in set_partitions(rest):
        for i in range(len(smaller)):
            yield smaller[:i] + [smaller[i] + [first]] + smaller[i + 1:]
        yield [[first]] + smaller


def best_partition_by_enumeration(g: SimilarityGraph) -> tuple[float, Partition]:
    best_q = -math.inf
    best = None
    for blocks in set_partitions(list(g.vertices)):
        labels = {v: i for i, block in enumerate(blocks) for v in block}
        p = Partition.from_labels(labels)
        q = modularity(g, p)
        if q > best_q:
            best_q = q
            best = p
    assert best is not None
    return best_q, best


def naive_dense_segment_graph(ds: TrajectoryDataset) -> dict[tuple[int, int], float]:
    """All-pairs dense-vector oracle for the segment similarity graph."""
    segments = ds.visited_segments()
    trajectory_ids = sorted(ds.trajectories)
    matrix = np.array([
        [segment_weight(ds, t, s) for t in trajectory_ids]
        for s in segments
    ])
    norms = np.linalg.norm(matrix, axis=1)
    edges: dict[tuple[int, int], float] = {}
    for i, j in combinations(range(len(segments)), 2):
        if norms[i] == 0 or norms[j] == 0:
            continue
        sim = float(matrix[i] @ matrix[j] / (norms[i] * norms[j]))
        if sim > 0:
            edges[(segments[i], segments[j])] = min(sim, 1.0)
    return edges


def bfs_hop_count(net: RoadNetwork, a: int, b: int) -> int | None:
    """Distance-only breadth-first oracle, independent of shortest_path."""
    if a == b:
        return 0
    dist = {a: 0}
    frontier = [a]
    while frontier:
        nxt = []
        for u in frontier:
            for sid in net.out_adjacency.get(u, []):
                v = net.segments[sid].to_node
                if v not in dist:
                    dist[v] = dist[u] + 1
                    if v == b:
                        return dist[v]
                    nxt.append(v)
        frontier = nxt
    return None


def improving_merge_exists(g: SimilarityGraph, p: Partition, tol: float = 1e-9) -> bool:
    q0 = modularity(g, p)
    for a in range(p.k):
        for b in range(a + 1, p.k):
            labels = {v: (a if c == b else c) for v, c in p.membership.items()}
            if modularity(g, Partition.from_labels(labels)) > q0 + tol:
                return True
    return False


def improving_move_exists(g: SimilarityGraph, p: Partition, tol: float = 1e-9) -> bool:
    q0 = modularity(g, p)
    for v in g.vertices:
        current = p.membership[v]
        targets = set(range(p.k)) - {current}
        targets.add(p.k)  # extraction into a fresh singleton
        for target in targets:
            labels = dict(p.membership)
            labels[v] = target
            if modularity(g, Partition.from_labels(labels)) > q0 + tol:
                return True
    return False


def assert_hierarchy_valid(hierarchy) -> None:
    """Structural contract: children partition parents, leaves cover all."""
    for node in hierarchy.nodes():
        if node.children:
            merged: list[int] = []
            for child in node.children:
                assert child.level == node.level + 1
                merged.extend(child.vertices)
            assert sorted(merged) == sorted(node.vertices)
    leaves = [v for leaf in hierarchy.leaves() for v in leaf.vertices]
    assert sorted(leaves) == sorted(hierarchy.vertices)
    for level in range(2, hierarchy.max_level + 1):
        coarse = hierarchy.partition_at_level(level - 1)
        fine = hierarchy.partition_at_level(level)
        # refinement: equal fine labels imply equal coarse labels
        by_fine: dict[int, set[int]] = {}
        for v, c in fine.membership.items():
            by_fine.setdefault(c, set()).add(coarse.membership[v])
        assert all(len(s) == 1 for s in by_fine.values())
