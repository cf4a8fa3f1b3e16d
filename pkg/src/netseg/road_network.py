"""Directed road-network graph: intersections (nodes) and directed segments.

The network constrains all movement. It is immutable once loaded and safe to
share between workers; every operation here is read-only.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Union

from netseg.errors import ValidationError

logger = logging.getLogger(__name__)

Source = Union[str, Path, IO[str]]


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class Segment:
    id: int
    from_node: int
    to_node: int


@dataclass
class RoadNetwork:
    """Directed graph of nodes and road segments with an out-adjacency index.

    ``out_adjacency`` maps each node id to the ascending-sorted list of
    segment ids leaving it; nodes without outgoing segments map to [].
    """

    nodes: dict[int, Node]
    segments: dict[int, Segment]
    out_adjacency: dict[int, list[int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.out_adjacency:
            adj: dict[int, list[int]] = {nid: [] for nid in self.nodes}
            for seg in self.segments.values():
                adj[seg.from_node].append(seg.id)
            for lst in adj.values():
                lst.sort()
            self.out_adjacency = adj

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def segment_count(self) -> int:
        return len(self.segments)

    def successors(self, segment_id: int) -> list[int]:
        """Segment ids that can directly continue ``segment_id`` (ascending)."""
        seg = self.segments.get(segment_id)
        if seg is None:
            raise ValidationError(f"unknown segment id {segment_id}")
        return list(self.out_adjacency.get(seg.to_node, []))

    def are_connected(self, first: int, second: int) -> bool:
        """True if ``second`` may follow ``first`` in a trajectory."""
        a = self.segments.get(first)
        b = self.segments.get(second)
        if a is None:
            raise ValidationError(f"unknown segment id {first}")
        if b is None:
            raise ValidationError(f"unknown segment id {second}")
        return a.to_node == b.from_node

    def shortest_path(self, a: int, b: int) -> list[int] | None:
        """Minimal-hop directed segment path from node ``a`` to node ``b``.

        Returns [] when a == b and None when b is unreachable. Breadth-first
        expansion follows out-segments in ascending id order, so among
        equal-length paths the one preferring lower segment ids wins.
        """
        if a not in self.nodes:
            raise ValidationError(f"unknown node id {a}")
        if b not in self.nodes:
            raise ValidationError(f"unknown node id {b}")
        if a == b:
            return []
        # parent[v] = segment used to reach v first
        parent: dict[int, int] = {a: -1}
        queue: deque[int] = deque([a])
        while queue:
            u = queue.popleft()
            for sid in self.out_adjacency.get(u, []):
                v = self.segments[sid].to_node
                if v in parent:
                    continue
                parent[v] = sid
                if v == b:
                    path: list[int] = []
                    node = v
                    while node != a:
                        sid = parent[node]
                        path.append(sid)
                        node = self.segments[sid].from_node
                    path.reverse()
                    return path
                queue.append(v)
        return None


def _open(source: Source):
    if isinstance(source, (str, Path)):
        return open(source, "r", newline=""), True
    return source, False


def _read_rows(source: Source, expected_header: list[str], what: str):
    handle, owned = _open(source)
    try:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValidationError(f"{what} file is empty (missing header)") from None
        header = [h.strip() for h in header]
        if header != expected_header:
            raise ValidationError(
                f"{what} header must be {','.join(expected_header)!r}, got {','.join(header)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            yield lineno, row
    finally:
        if owned:
            handle.close()


def load_network(node_source: Source, segment_source: Source) -> RoadNetwork:
    """Load and validate a road network from two CSV sources.

    Nodes CSV: header ``node_id,x,y``. Segments CSV: header
    ``segment_id,from_node,to_node``. All ids are base-10 integers.
    Raises ValidationError (with line numbers) on duplicate ids, dangling
    endpoints, self-loops or malformed rows.
    """
    nodes: dict[int, Node] = {}
    for lineno, row in _read_rows(node_source, ["node_id", "x", "y"], "nodes"):
        if len(row) != 3:
            raise ValidationError(f"nodes line {lineno}: expected 3 fields, got {len(row)}")
        try:
            nid = int(row[0])
            x = float(row[1])
            y = float(row[2])
        except ValueError as exc:
            raise ValidationError(f"nodes line {lineno}: {exc}") from None
        if nid < 0:
            raise ValidationError(f"nodes line {lineno}: negative node id {nid}")
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValidationError(f"nodes line {lineno}: non-finite coordinate for node {nid}")
        if nid in nodes:
            raise ValidationError(f"nodes line {lineno}: duplicate node id {nid}")
        nodes[nid] = Node(nid, x, y)

    segments: dict[int, Segment] = {}
    endpoint_pairs: dict[tuple[int, int], int] = {}
    for lineno, row in _read_rows(
        segment_source, ["segment_id", "from_node", "to_node"], "segments"
    ):
        if len(row) != 3:
            raise ValidationError(f"segments line {lineno}: expected 3 fields, got {len(row)}")
        try:
            sid, u, v = (int(f) for f in row)
        except ValueError as exc:
            raise ValidationError(f"segments line {lineno}: {exc}") from None
        if sid < 0:
            raise ValidationError(f"segments line {lineno}: negative segment id {sid}")
        if sid in segments:
            raise ValidationError(f"segments line {lineno}: duplicate segment id {sid}")
        if u == v:
            raise ValidationError(f"segments line {lineno}: segment {sid} is a self-loop at node {u}")
        for endpoint in (u, v):
            if endpoint not in nodes:
                raise ValidationError(
                    f"segments line {lineno}: segment {sid} references unknown node {endpoint}"
                )
        segments[sid] = Segment(sid, u, v)
        endpoint_pairs[(u, v)] = endpoint_pairs.get((u, v), 0) + 1

    if not segments:
        raise ValidationError("a usable network needs at least one segment")
    parallel = sum(c - 1 for c in endpoint_pairs.values() if c > 1)
    if parallel:
        # Parallel carriageways are legal; surfaced only as a diagnostic.
        logger.info("network contains %d parallel segment(s)", parallel)
    net = RoadNetwork(nodes=nodes, segments=segments)
    logger.debug("loaded network: %d nodes, %d segments", net.node_count, net.segment_count)
    return net


def write_network(net: RoadNetwork, node_path: Union[str, Path], segment_path: Union[str, Path]) -> None:
    """Write a network back out in the load_network CSV formats."""
    with open(node_path, "w", newline="") as fh:
        fh.write("node_id,x,y\n")
        for nid in sorted(net.nodes):
            n = net.nodes[nid]
            fh.write(f"{n.id},{n.x:.9g},{n.y:.9g}\n")
    with open(segment_path, "w", newline="") as fh:
        fh.write("segment_id,from_node,to_node\n")
        for sid in sorted(net.segments):
            s = net.segments[sid]
            fh.write(f"{s.id},{s.from_node},{s.to_node}\n")


def build_network(nodes: Iterable[tuple[int, float, float]],
                  segments: Iterable[tuple[int, int, int]]) -> RoadNetwork:
    """Construct a validated network from in-memory tuples (id, ...)."""
    node_map: dict[int, Node] = {}
    for nid, x, y in nodes:
        if nid in node_map:
            raise ValidationError(f"duplicate node id {nid}")
        node_map[nid] = Node(nid, float(x), float(y))
    seg_map: dict[int, Segment] = {}
    for sid, u, v in segments:
        if sid in seg_map:
            raise ValidationError(f"duplicate segment id {sid}")
        if u == v:
            raise ValidationError(f"segment {sid} is a self-loop at node {u}")
        if u not in node_map or v not in node_map:
            raise ValidationError(f"segment {sid} references unknown node {u if u not in node_map else v}")
        seg_map[sid] = Segment(sid, u, v)
    if not seg_map:
        raise ValidationError("a usable network needs at least one segment")
    return RoadNetwork(nodes=node_map, segments=seg_map)
