"""Modularity and hierarchical modularity-based community detection.

The partition procedure merges communities greedily (always the connected
pair with the largest modularity gain, while the gain is positive) and then
interchanges single vertices between communities until no relocation helps.
The hierarchy is built by recursively partitioning each cluster's induced
subgraph and keeping only subdivisions that beat degree-preserving random
rewirings of the same subgraph.

Modularity uses the ordered-pair convention: every undirected edge counts
once per direction, which makes the single-community partition score exactly
zero.
"""

from __future__ import annotations

import heapq
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Union

import numpy as np

from netseg.errors import ValidationError
from netseg.similarity import SimilarityGraph

logger = logging.getLogger(__name__)

_VERIFY_TOL = 1e-10
# Gains below this are rounding noise. On exactly symmetric graphs a move and
# its inverse can both evaluate to ~+1e-17, which would oscillate forever if
# "> 0" were taken literally.
_GAIN_TOL = 1e-12


@dataclass(frozen=True)
class Partition:
    """Vertex -> community index map with contiguous indices [0, k)."""

    membership: dict[int, int]
    k: int

    @classmethod
    def from_labels(cls, labels: dict[int, int]) -> "Partition":
        """Canonicalize arbitrary labels: index by first appearance over
        ascending vertex ids (equivalently, communities sorted by their
        smallest member)."""
        remap: dict[int, int] = {}
        membership: dict[int, int] = {}
        for v in sorted(labels):
            lab = labels[v]
            if lab not in remap:
                remap[lab] = len(remap)
            membership[v] = remap[lab]
        return cls(membership=membership, k=len(remap))

    def communities(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.k)]
        for v in sorted(self.membership):
            groups[self.membership[v]].append(v)
        return groups


@dataclass(frozen=True)
class NullModelConfig:
    replicates: int = 30
    z_threshold: float = 2.0
    min_subgraph_size: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValidationError("replicates must be >= 1")
        if self.z_threshold < 0:
            raise ValidationError("z_threshold must be >= 0")
        if self.min_subgraph_size < 0:
            raise ValidationError("min_subgraph_size must be >= 0")


@dataclass(frozen=True)
class SignificanceResult:
    significant: bool
    q_observed: float
    k: int
    reason: str  # "tested" | "below_min_size" | "single_community"
    null_mean: float | None = None
    null_std: float | None = None
    z_score: float | None = None
    replicates: int = 0


def _check_cover(g: SimilarityGraph, p: Partition) -> None:
    if set(p.membership) != set(g.adj):
        raise ValidationError("partition does not cover exactly the graph's vertices")


def modularity(g: SimilarityGraph, p: Partition) -> float:
    """Ordered-pair modularity of a partition; 0.0 for edgeless graphs."""
    _check_cover(g, p)
    m = g.total_weight
    if m == 0.0:
        return 0.0
    intra = [0.0] * p.k
    deg = [0.0] * p.k
    for v in g.vertices:
        deg[p.membership[v]] += g.degree[v]
    for i, j, w in g.edges():
        ci = p.membership[i]
        if ci == p.membership[j]:
            intra[ci] += 2.0 * w
    two_m = 2.0 * m
    return sum(intra[c] / two_m - (deg[c] / two_m) ** 2 for c in range(p.k))


# --- greedy merge + refinement ------------------------------------------------

def _merge_phase(g: SimilarityGraph, p: Partition, _verify: bool = False) -> Partition:
    """Greedily merge connected community pairs while the best gain is > 0."""
    m = g.total_weight
    if m == 0.0 or p.k < 2:
        return Partition.from_labels(p.membership)
    two_m = 2.0 * m
    k = p.k
    comm_of = p.membership
    deg_sum = [0.0] * k
    members: list[list[int]] = [[] for _ in range(k)]
    for v in sorted(comm_of):
        c = comm_of[v]
        deg_sum[c] += g.degree[v]
        members[c].append(v)
    nbr: list[dict[int, float]] = [{} for _ in range(k)]
    for i, j, w in g.edges():
        ci, cj = comm_of[i], comm_of[j]
        if ci != cj:
            nbr[ci][cj] = nbr[ci].get(cj, 0.0) + w
            nbr[cj][ci] = nbr[cj].get(ci, 0.0) + w
    alive = [True] * k
    epoch = [0] * k

    q_tracked = modularity(g, p) if _verify else 0.0

    def gain(a: int, b: int) -> float:
        return (nbr[a][b] - deg_sum[a] * deg_sum[b] / two_m) / m

    heap: list[tuple[float, int, int, int, int]] = []
    for a in range(k):
        for b in nbr[a]:
            if a < b:
                dq = gain(a, b)
                if dq > _GAIN_TOL:
                    heap.append((-dq, a, b, 0, 0))
    heapq.heapify(heap)

    while heap:
        neg_dq, a, b, ea, eb = heapq.heappop(heap)
        if not (alive[a] and alive[b]) or epoch[a] != ea or epoch[b] != eb:
            continue
        # keep the index with the larger neighbor map so the rename loop
        # below touches the smaller one
        win, lose = (a, b) if len(nbr[a]) >= len(nbr[b]) else (b, a)
        epoch[win] += 1
        alive[lose] = False
        n_win, n_lose = nbr[win], nbr[lose]
        n_win.pop(lose, None)
        n_lose.pop(win, None)
        for c, w in n_lose.items():
            total = n_win.get(c, 0.0) + w
            n_win[c] = total
            other = nbr[c]
            other.pop(lose, None)
            other[win] = total
        nbr[lose] = {}
        deg_sum[win] += deg_sum[lose]
        members[win].extend(members[lose])
        members[lose] = []
        if _verify:
            q_tracked += -neg_dq
            labels = {
                v: c for c in range(k) if alive[c] for v in members[c]
            }
            q_full = modularity(g, Partition.from_labels(labels))
            if abs(q_full - q_tracked) > _VERIFY_TOL:
                raise AssertionError(
                    f"incremental merge gain drifted: tracked {q_tracked}, full {q_full}"
                )
        d_win = deg_sum[win]
        for c, w in n_win.items():
            dq = (w - d_win * deg_sum[c] / two_m) / m
            if dq > _GAIN_TOL:
                lo, hi = (win, c) if win < c else (c, win)
                heapq.heappush(heap, (-dq, lo, hi, epoch[lo], epoch[hi]))

    labels: dict[int, int] = {}
    for c in range(k):
        if alive[c]:
            for v in members[c]:
                labels[v] = c
    return Partition.from_labels(labels)


def refine_partition(g: SimilarityGraph, p: Partition, _verify: bool = False) -> Partition:
    """Relocate single vertices to better communities until a pass is clean.

    Candidate targets are the communities among a vertex's neighbors plus a
    fresh singleton; a move is applied only for a strictly positive
    modularity gain. Empty communities are dropped and indices re-compacted.
    """
    _check_cover(g, p)
    m = g.total_weight
    if m == 0.0:
        return Partition.from_labels(p.membership)
    two_m2 = 2.0 * m * m
    comm_of = dict(p.membership)
    next_label = p.k
    deg_sum: dict[int, float] = {}
    size: dict[int, int] = {}
    for v in sorted(comm_of):
        c = comm_of[v]
        deg_sum[c] = deg_sum.get(c, 0.0) + g.degree[v]
        size[c] = size.get(c, 0) + 1

    q_tracked = modularity(g, p) if _verify else 0.0
    order = sorted(comm_of)
    while True:
        moved = False
        for v in order:
            nbrs = g.adj[v]
            if not nbrs:
                continue
            c = comm_of[v]
            dv = g.degree[v]
            w_to: dict[int, float] = {}
            for u, w in nbrs.items():  # ascending; adjacency is pre-sorted
                cu = comm_of[u]
                w_to[cu] = w_to.get(cu, 0.0) + w
            k_vc = w_to.get(c, 0.0)
            d_rest = deg_sum[c] - dv
            best_gain = _GAIN_TOL
            best_target: int | None = None
            for c2 in sorted(w_to):
                if c2 == c:
                    continue
                dq = (w_to[c2] - k_vc) / m - dv * (deg_sum[c2] - d_rest) / two_m2
                if dq > best_gain:
                    best_gain = dq
                    best_target = c2
            if size[c] > 1:
                dq = -k_vc / m + dv * d_rest / two_m2
                if dq > best_gain:
                    best_gain = dq
                    best_target = -1  # extract into a fresh singleton
            if best_target is None:
                continue
            if best_target == -1:
                best_target = next_label
                next_label += 1
                deg_sum[best_target] = 0.0
                size[best_target] = 0
            comm_of[v] = best_target
            deg_sum[c] -= dv
            size[c] -= 1
            deg_sum[best_target] += dv
            size[best_target] += 1
            if size[c] == 0:
                del deg_sum[c], size[c]
            moved = True
            if _verify:
                q_tracked += best_gain
                q_full = modularity(g, Partition.from_labels(comm_of))
                if abs(q_full - q_tracked) > _VERIFY_TOL:
                    raise AssertionError(
                        f"incremental move gain drifted: tracked {q_tracked}, full {q_full}"
                    )
        if not moved:
            break
    return Partition.from_labels(comm_of)


def greedy_partition(g: SimilarityGraph, seed: int = 0, _verify: bool = False) -> Partition:
    """Modularity partition: greedy merges from singletons, then refinement.

    Merge and refinement phases alternate until neither changes the
    partition, so the result admits no improving pairwise merge and no
    improving single-vertex move. Ties are broken on the lexicographically
    smallest community-index pair, which makes the outcome deterministic;
    ``seed`` is accepted for interface parity but never consulted.
    """
    if not g.vertices:
        raise ValidationError("cannot partition an empty graph")
    del seed
    p = Partition.from_labels({v: i for i, v in enumerate(g.vertices)})
    while True:
        merged = _merge_phase(g, p, _verify=_verify)
        refined = refine_partition(g, merged, _verify=_verify)
        if refined == p:
            return refined
        p = refined


# --- significance testing ----------------------------------------------------

def _rewired_null(g: SimilarityGraph, rng: np.random.Generator) -> SimilarityGraph:
    """Degree-respecting double-edge swaps with the weight multiset shuffled
    onto the rewired topology."""
    weights = [w for _, _, w in g.edges()]
    n_edges = len(weights)
    # endpoints live in parallel lists plus a packed-int membership set:
    # int hashing in the swap loop is markedly cheaper than tuple hashing
    stride = (g.vertices[-1] + 1) if g.vertices else 1
    heads = [i for i, _, _ in g.edges()]
    tails = [j for _, j, _ in g.edges()]
    if n_edges >= 2:
        attempts = 10 * n_edges
        xs = rng.integers(0, n_edges, size=attempts).tolist()
        ys = rng.integers(0, n_edges, size=attempts).tolist()
        flips = (rng.random(attempts) < 0.5).tolist()
        present = {i * stride + j for i, j in zip(heads, tails)}
        for x, y, flip in zip(xs, ys, flips):
            if x == y:
                continue
            a = heads[x]
            b = tails[x]
            c = heads[y]
            d = tails[y]
            if flip:
                b, a = a, b  # swap orientation for richer mixing
            # propose (a, d) and (c, b)
            if a == d or c == b:
                continue
            e1 = a * stride + d if a < d else d * stride + a
            e2 = c * stride + b if c < b else b * stride + c
            if e1 == e2 or e1 in present or e2 in present:
                continue
            present.remove(heads[x] * stride + tails[x])
            present.remove(heads[y] * stride + tails[y])
            present.add(e1)
            present.add(e2)
            heads[x], tails[x] = (a, d) if a < d else (d, a)
            heads[y], tails[y] = (c, b) if c < b else (b, c)
    order = rng.permutation(n_edges).tolist() if n_edges else []
    return SimilarityGraph.from_edges(
        g.vertices,
        [(i, j, weights[k]) for i, j, k in zip(heads, tails, order)],
    )


def _null_modularity(args: tuple[SimilarityGraph, int]) -> float:
    g, seed = args
    null = _rewired_null(g, np.random.default_rng(seed))
    return modularity(null, greedy_partition(null))


def test_significance(g: SimilarityGraph, p: Partition, cfg: NullModelConfig,
                      workers: int = 1, executor: ProcessPoolExecutor | None = None) -> SignificanceResult:
    """Compare a partition's modularity against rewired null graphs.

    Significant iff Q_observed > mean(Q_null) + z_threshold * std(Q_null),
    the graph has at least ``min_subgraph_size`` vertices and the partition
    has at least two communities. A zero-variance null degenerates to
    Q_observed > mean. Replicate r derives its seed as cfg.seed + r, so the
    result is independent of worker scheduling; ``executor`` lets callers
    reuse one process pool across many tests.
    """
    q_obs = modularity(g, p)
    if len(g.vertices) < cfg.min_subgraph_size:
        return SignificanceResult(False, q_obs, p.k, "below_min_size")
    if p.k < 2:
        return SignificanceResult(False, q_obs, p.k, "single_community")
    tasks = [(g, cfg.seed + r) for r in range(cfg.replicates)]
    # tiny subgraphs are cheaper inline than crossing process boundaries
    parallel = cfg.replicates > 1 and g.edge_count >= 512
    if executor is not None and parallel:
        q_null = list(executor.map(_null_modularity, tasks, chunksize=4))
    elif workers > 1 and parallel:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            q_null = list(pool.map(_null_modularity, tasks, chunksize=4))
    else:
        q_null = [_null_modularity(t) for t in tasks]
    mean = math.fsum(q_null) / len(q_null)
    if len(q_null) > 1:
        var = math.fsum((q - mean) ** 2 for q in q_null) / (len(q_null) - 1)
        std = math.sqrt(var)
    else:
        std = 0.0
    z = (q_obs - mean) / std if std > 0.0 else math.inf if q_obs > mean else -math.inf
    significant = q_obs > mean + cfg.z_threshold * std if std > 0.0 else q_obs > mean
    return SignificanceResult(
        significant=significant,
        q_observed=q_obs,
        k=p.k,
        reason="tested",
        null_mean=mean,
        null_std=std,
        z_score=z,
        replicates=len(q_null),
    )


# --- hierarchy ----------------------------------------------------------------

@dataclass
class HierarchyNode:
    id: int
    level: int
    vertices: tuple[int, ...]
    children: list["HierarchyNode"] = field(default_factory=list)
    split_modularity: float | None = None
    significant: bool = False
    diagnostics: SignificanceResult | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children

    def vertex_set(self) -> frozenset[int]:
        cached = self.__dict__.get("_vset")
        if cached is None:
            cached = frozenset(self.vertices)
            self.__dict__["_vset"] = cached
        return cached


@dataclass
class ClusterHierarchy:
    """Tree of nested vertex clusters; roots are the level-1 communities."""

    roots: list[HierarchyNode]
    vertices: tuple[int, ...]
    level1_modularity: float | None

    @property
    def max_level(self) -> int:
        return max(n.level for n in self.nodes())

    def nodes(self) -> Iterator[HierarchyNode]:
        """All nodes in ascending id order."""
        collected: list[HierarchyNode] = []
        stack = list(self.roots)
        while stack:
            node = stack.pop()
            collected.append(node)
            stack.extend(node.children)
        collected.sort(key=lambda n: n.id)
        return iter(collected)

    def node_by_id(self, node_id: int) -> HierarchyNode:
        for node in self.nodes():
            if node.id == node_id:
                return node
        raise ValidationError(f"unknown hierarchy node id {node_id}")

    def level_cut(self, level: int) -> list[HierarchyNode]:
        """Nodes forming the partition at ``level``: exact-level nodes plus
        shallower leaves, in ascending node-id order."""
        if level < 1 or level > self.max_level:
            raise ValidationError(f"unknown hierarchy level {level} (1..{self.max_level})")
        cut: list[HierarchyNode] = []

        def descend(node: HierarchyNode) -> None:
            if node.level == level or node.is_leaf:
                cut.append(node)
                return
            for child in node.children:
                descend(child)

        for root in self.roots:
            descend(root)
        cut.sort(key=lambda n: n.id)
        return cut

    def partition_at_level(self, level: int) -> Partition:
        """Partition induced by cutting the tree at ``level``; community i is
        the i-th cut node in ascending node-id order."""
        membership: dict[int, int] = {}
        for index, node in enumerate(self.level_cut(level)):
            for v in node.vertices:
                membership[v] = index
        return Partition(membership=membership, k=len(self.level_cut(level)))

    def leaves(self) -> list[HierarchyNode]:
        return [n for n in self.nodes() if n.is_leaf]

    def level1_of(self, vertex: int) -> int:
        for root in self.roots:
            if vertex in root.vertex_set():
                return root.id
        raise ValidationError(f"vertex {vertex} not covered by the hierarchy")


def _subdivide(args: tuple[SimilarityGraph, int, NullModelConfig]) -> tuple[SignificanceResult, list[list[int]]]:
    sub, seed, cfg = args
    p_sub = greedy_partition(sub, seed)
    return test_significance(sub, p_sub, cfg), p_sub.communities()


# subgraphs at least this dense go through the per-replicate pool; smaller
# ones are batched whole-node onto the pool instead
_BIG_SUBGRAPH_EDGES = 4096


def hierarchical_cluster(g: SimilarityGraph, cfg: NullModelConfig,
                         seed: int = 0, workers: int = 1) -> ClusterHierarchy:
    """Recursive modularity clustering with significance-gated subdivision.

    Level 1 is the partition of the whole graph. Each cluster's induced
    subgraph is partitioned in turn and the subdivision is kept only when it
    beats the rewired null model; otherwise the cluster stays a leaf. Nodes
    are numbered in discovery order starting at 1 (the running cluster
    counter). Each node's null model derives its seed as cfg.seed + node id,
    so results are identical no matter how sibling subdivisions are scheduled
    across workers.
    """
    if not g.vertices:
        raise ValidationError("cannot cluster an empty graph")
    p1 = greedy_partition(g, seed)
    q1 = modularity(g, p1)
    roots = []
    counter = 0
    for community in p1.communities():
        counter += 1
        roots.append(HierarchyNode(id=counter, level=1, vertices=tuple(community)))
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        frontier = list(roots)
        level = 1
        while frontier:
            level += 1
            outcomes: dict[int, tuple[SignificanceResult, list[list[int]]]] = {}
            big: list[tuple[HierarchyNode, SimilarityGraph]] = []
            small: list[tuple[HierarchyNode, SimilarityGraph]] = []
            for node in frontier:
                if len(node.vertices) < 2:
                    node.diagnostics = SignificanceResult(False, 0.0, 1, "single_vertex")
                    continue
                sub = g.subgraph(node.vertices)
                if sub.total_weight == 0.0:
                    # all-singleton subdivisions are never emitted
                    node.diagnostics = SignificanceResult(False, 0.0, 1, "no_edges")
                    continue
                if executor is not None and sub.edge_count < _BIG_SUBGRAPH_EDGES:
                    small.append((node, sub))
                else:
                    big.append((node, sub))
            for node, sub in big:
                p_sub = greedy_partition(sub, seed)
                outcomes[node.id] = (
                    test_significance(sub, p_sub, replace(cfg, seed=cfg.seed + node.id),
                                      workers=workers, executor=executor),
                    p_sub.communities(),
                )
            if small:
                tasks = [(sub, seed, replace(cfg, seed=cfg.seed + node.id))
                         for node, sub in small]
                if executor is not None:
                    results = list(executor.map(_subdivide, tasks, chunksize=1))
                else:
                    results = [_subdivide(t) for t in tasks]
                for (node, _sub), outcome in zip(small, results):
                    outcomes[node.id] = outcome
            next_frontier: list[HierarchyNode] = []
            for node in frontier:  # id order, so the counter is deterministic
                outcome = outcomes.get(node.id)
                if outcome is None:
                    continue
                result, communities = outcome
                node.split_modularity = result.q_observed
                node.diagnostics = result
                node.significant = result.significant
                if not result.significant:
                    continue
                for community in communities:
                    counter += 1
                    child = HierarchyNode(id=counter, level=level, vertices=tuple(community))
                    node.children.append(child)
                    next_frontier.append(child)
            frontier = next_frontier
    finally:
        if executor is not None:
            executor.shutdown()
    hierarchy = ClusterHierarchy(roots=roots, vertices=tuple(g.vertices), level1_modularity=q1)
    logger.debug(
        "hierarchy: %d level-1 clusters, %d nodes, depth %d",
        len(roots), sum(1 for _ in hierarchy.nodes()), hierarchy.max_level,
    )
    return hierarchy


def level_modularities(g: SimilarityGraph, hierarchy: ClusterHierarchy) -> dict[int, float]:
    """Modularity of the level cut for every level (for inspection/reports)."""
    return {
        level: modularity(g, hierarchy.partition_at_level(level))
        for level in range(1, hierarchy.max_level + 1)
    }


# --- persistence -------------------------------------------------------------

def write_partition(p: Partition, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        fh.write("vertex_id,community\n")
        for v in sorted(p.membership):
            fh.write(f"{v},{p.membership[v]}\n")


def load_partition(path: Union[str, Path]) -> Partition:
    labels: dict[int, int] = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "vertex_id,community":
            raise ValidationError(f"partition header must be 'vertex_id,community', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                v_s, c_s = line.split(",")
                labels[int(v_s)] = int(c_s)
            except ValueError:
                raise ValidationError(f"partition line {lineno}: malformed row {line!r}") from None
    return Partition.from_labels(labels)


def write_hierarchy(h: ClusterHierarchy, nodes_path: Union[str, Path],
                    membership_path: Union[str, Path]) -> None:
    """Line-oriented hierarchy export plus a vertex membership file."""
    parent_of: dict[int, int] = {}
    for node in h.nodes():
        for child in node.children:
            parent_of[child.id] = node.id
    with open(nodes_path, "w") as fh:
        fh.write("node_id,parent_id,level,significant,modularity,vertex_count\n")
        for node in h.nodes():
            q = "" if node.split_modularity is None else f"{node.split_modularity:.9g}"
            fh.write(
                f"{node.id},{parent_of.get(node.id, -1)},{node.level},"
                f"{1 if node.significant else 0},{q},{len(node.vertices)}\n"
            )
    leaf_of: dict[int, int] = {}
    for leaf in h.leaves():
        for v in leaf.vertices:
            leaf_of[v] = leaf.id
    level1_of: dict[int, int] = {}
    for root in h.roots:
        for v in root.vertices:
            level1_of[v] = root.id
    with open(membership_path, "w") as fh:
        fh.write("vertex_id,leaf_node_id,level1_node_id\n")
        for v in sorted(leaf_of):
            fh.write(f"{v},{leaf_of[v]},{level1_of[v]}\n")


def load_hierarchy(nodes_path: Union[str, Path],
                   membership_path: Union[str, Path]) -> ClusterHierarchy:
    rows: list[tuple[int, int, int, bool, float | None]] = []
    with open(nodes_path) as fh:
        header = fh.readline().strip()
        if header != "node_id,parent_id,level,significant,modularity,vertex_count":
            raise ValidationError(f"unexpected hierarchy header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValidationError(f"hierarchy line {lineno}: expected 6 fields")
            try:
                q = float(parts[4]) if parts[4] else None
                rows.append((int(parts[0]), int(parts[1]), int(parts[2]),
                             parts[3] == "1", q))
            except ValueError as exc:
                raise ValidationError(f"hierarchy line {lineno}: {exc}") from None
    leaf_vertices: dict[int, list[int]] = {}
    with open(membership_path) as fh:
        header = fh.readline().strip()
        if header != "vertex_id,leaf_node_id,level1_node_id":
            raise ValidationError(f"unexpected membership header {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                v_s, leaf_s, _root_s = line.split(",")
                leaf_vertices.setdefault(int(leaf_s), []).append(int(v_s))
            except ValueError:
                raise ValidationError(f"membership line {lineno}: malformed row {line!r}") from None

    nodes: dict[int, HierarchyNode] = {}
    for nid, _parent, level, significant, q in rows:
        nodes[nid] = HierarchyNode(id=nid, level=level, vertices=(),
                                   split_modularity=q, significant=significant)
    roots: list[HierarchyNode] = []
    for nid, parent, _level, _sig, _q in rows:
        if parent == -1:
            roots.append(nodes[nid])
        else:
            if parent not in nodes:
                raise ValidationError(f"hierarchy node {nid} references unknown parent {parent}")
            nodes[parent].children.append(nodes[nid])
    # vertex sets: leaves from the membership file, parents by union
    def fill(node: HierarchyNode) -> tuple[int, ...]:
        if node.children:
            node.children.sort(key=lambda n: n.id)
            merged: list[int] = []
            for child in node.children:
                merged.extend(fill(child))
            node.vertices = tuple(sorted(merged))
        else:
            node.vertices = tuple(sorted(leaf_vertices.get(node.id, ())))
            if not node.vertices:
                raise ValidationError(f"leaf node {node.id} has no member vertices")
        return node.vertices

    all_vertices: list[int] = []
    roots.sort(key=lambda n: n.id)
    for root in roots:
        all_vertices.extend(fill(root))
    return ClusterHierarchy(roots=roots, vertices=tuple(sorted(all_vertices)),
                            level1_modularity=None)
