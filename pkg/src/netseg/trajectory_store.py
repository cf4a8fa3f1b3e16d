"""Validated map-matched trajectories, their inverted index, and a synthetic
dataset generator.

A trajectory is an ordered chain of connected road segments. The dataset keeps
a segment -> {trajectory: visit count} inverted index, which is the transpose
of the trajectory list and drives all similarity computations.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Union

from netseg.errors import ValidationError
from netseg.road_network import RoadNetwork

logger = logging.getLogger(__name__)

Source = Union[str, Path, IO[str]]

_MAX_OD_ATTEMPTS = 100
_MAX_DETOURS = 100  # safety valve; expected detour count is far lower


@dataclass(frozen=True)
class Trajectory:
    id: int
    segments: tuple[int, ...]  # ordered; repeated visits allowed

    @property
    def length(self) -> int:
        return len(self.segments)

    def distinct_segments(self) -> frozenset[int]:
        return frozenset(self.segments)


@dataclass(frozen=True)
class GeneratorConfig:
    n_trajectories: int
    n_archetypes: int
    detour_probability: float = 0.0
    od_jitter: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trajectories < 0:
            raise ValidationError("n_trajectories must be >= 0")
        if self.n_archetypes < 1:
            raise ValidationError("n_archetypes must be >= 1")
        if not 0.0 <= self.detour_probability <= 1.0:
            raise ValidationError("detour_probability must lie in [0, 1]")
        if self.od_jitter < 0:
            raise ValidationError("od_jitter must be >= 0")


class TrajectoryDataset:
    """Immutable set of validated trajectories over one road network."""

    def __init__(self, network: RoadNetwork, trajectories: Iterable[Trajectory],
                 ground_truth: dict[int, int] | None = None):
        self.network = network
        self.trajectories: dict[int, Trajectory] = {}
        self.inverted_index: dict[int, dict[int, int]] = {}
        #: archetype id per trajectory when generated synthetically, else None
        self.ground_truth = ground_truth
        for traj in trajectories:
            self._add(traj)
        self._visitor_cache: dict[int, frozenset[int]] = {}
        self._distinct_cache: dict[int, frozenset[int]] = {}

    def _add(self, traj: Trajectory) -> None:
        if traj.id in self.trajectories:
            raise ValidationError(f"duplicate trajectory id {traj.id}")
        if traj.length < 1:
            raise ValidationError(f"trajectory {traj.id} is empty")
        for pos, sid in enumerate(traj.segments):
            if sid not in self.network.segments:
                raise ValidationError(
                    f"trajectory {traj.id}: unknown segment id {sid} at position {pos}"
                )
        for pos in range(traj.length - 1):
            if not self.network.are_connected(traj.segments[pos], traj.segments[pos + 1]):
                raise ValidationError(
                    f"trajectory {traj.id}: segments at positions {pos} and {pos + 1} "
                    f"({traj.segments[pos]} -> {traj.segments[pos + 1]}) are not connected"
                )
        self.trajectories[traj.id] = traj
        for sid in traj.segments:
            counts = self.inverted_index.setdefault(sid, {})
            counts[traj.id] = counts.get(traj.id, 0) + 1

    @property
    def n(self) -> int:
        return len(self.trajectories)

    def visited_segments(self) -> list[int]:
        """Ascending ids of segments visited by at least one trajectory."""
        return sorted(self.inverted_index)

    def visitors(self, segment_id: int) -> frozenset[int]:
        """Distinct trajectory ids that visited ``segment_id``."""
        cached = self._visitor_cache.get(segment_id)
        if cached is None:
            cached = frozenset(self.inverted_index.get(segment_id, ()))
            self._visitor_cache[segment_id] = cached
        return cached

    def visit_total(self, segment_id: int) -> int:
        """Total number of visits of ``segment_id`` across the whole dataset."""
        return sum(self.inverted_index.get(segment_id, {}).values())

    def visit_count(self, segment_id: int, trajectory_id: int) -> int:
        return self.inverted_index.get(segment_id, {}).get(trajectory_id, 0)

    def distinct_of(self, trajectory_id: int) -> frozenset[int]:
        """Distinct segments visited by one trajectory (cached)."""
        cached = self._distinct_cache.get(trajectory_id)
        if cached is None:
            cached = self.trajectories[trajectory_id].distinct_segments()
            self._distinct_cache[trajectory_id] = cached
        return cached


@dataclass(frozen=True)
class DatasetStats:
    n: int
    distinct_segments: int
    min_length: int
    mean_length: float
    max_length: int


def dataset_stats(ds: TrajectoryDataset) -> DatasetStats:
    """Summary record mirroring the synthetic-dataset characteristics table."""
    if ds.n == 0:
        return DatasetStats(0, 0, 0, 0.0, 0)
    lengths = [t.length for t in ds.trajectories.values()]
    return DatasetStats(
        n=ds.n,
        distinct_segments=len(ds.inverted_index),
        min_length=min(lengths),
        mean_length=sum(lengths) / len(lengths),
        max_length=max(lengths),
    )


def load_trajectories(net: RoadNetwork, source: Source) -> TrajectoryDataset:
    """Parse and validate a trajectory file.

    One trajectory per line: ``trajectory_id;seg_1,seg_2,...,seg_l``.
    """
    if isinstance(source, (str, Path)):
        handle = open(source, "r")
        owned = True
    else:
        handle, owned = source, False
    trajectories: list[Trajectory] = []
    try:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            head, sep, tail = line.partition(";")
            if not sep:
                raise ValidationError(f"trajectories line {lineno}: missing ';' separator")
            try:
                tid = int(head)
                segs = tuple(int(f) for f in tail.split(",") if f.strip() != "")
            except ValueError as exc:
                raise ValidationError(f"trajectories line {lineno}: {exc}") from None
            if tid < 0:
                raise ValidationError(f"trajectories line {lineno}: negative trajectory id {tid}")
            if not segs:
                raise ValidationError(f"trajectories line {lineno}: trajectory {tid} has no segments")
            trajectories.append(Trajectory(tid, segs))
    finally:
        if owned:
            handle.close()
    return TrajectoryDataset(net, trajectories)


def write_trajectories(ds: TrajectoryDataset, path: Union[str, Path]) -> None:
    """Write the trajectory file format consumed by load_trajectories."""
    with open(path, "w") as fh:
        for tid in sorted(ds.trajectories):
            segs = ",".join(str(s) for s in ds.trajectories[tid].segments)
            fh.write(f"{tid};{segs}\n")


def write_ground_truth(ds: TrajectoryDataset, path: Union[str, Path]) -> None:
    """Write the ``trajectory_id;archetype_id`` sidecar of a generated dataset."""
    if ds.ground_truth is None:
        raise ValidationError("dataset carries no ground-truth archetype assignment")
    with open(path, "w") as fh:
        for tid in sorted(ds.ground_truth):
            fh.write(f"{tid};{ds.ground_truth[tid]}\n")


def load_ground_truth(source: Source) -> dict[int, int]:
    if isinstance(source, (str, Path)):
        handle = open(source, "r")
        owned = True
    else:
        handle, owned = source, False
    truth: dict[int, int] = {}
    try:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                tid_s, aid_s = line.split(";")
                truth[int(tid_s)] = int(aid_s)
            except ValueError:
                raise ValidationError(f"ground-truth line {lineno}: malformed row {line!r}") from None
    finally:
        if owned:
            handle.close()
    return truth


def _jittered(net: RoadNetwork, rng: random.Random, node: int, max_hops: int) -> int:
    """Random out-walk of up to ``max_hops`` hops starting at ``node``."""
    if max_hops <= 0:
        return node
    hops = rng.randint(0, max_hops)
    current = node
    for _ in range(hops):
        outgoing = net.out_adjacency.get(current, [])
        if not outgoing:
            break
        sid = rng.choice(outgoing)
        current = net.segments[sid].to_node
    return current


def _route_with_detours(net: RoadNetwork, rng: random.Random, origin: int,
                        destination: int, detour_probability: float) -> tuple[int, ...]:
    """Follow the shortest path, optionally detouring at visited nodes.

    A detour takes one random outgoing segment and re-plans from its head;
    detours whose head cannot reach the destination are skipped.
    """
    planned = net.shortest_path(origin, destination)
    assert planned, "caller guarantees a non-trivial reachable pair"
    visited: list[int] = []
    current = origin
    index = 0
    detours_left = _MAX_DETOURS
    while current != destination:
        if detour_probability > 0 and detours_left > 0 and rng.random() < detour_probability:
            sid = rng.choice(net.out_adjacency[current])
            head = net.segments[sid].to_node
            replanned = [] if head == destination else net.shortest_path(head, destination)
            if replanned is not None:
                visited.append(sid)
                current = head
                planned = replanned
                index = 0
                detours_left -= 1
                continue
        sid = planned[index]
        index += 1
        visited.append(sid)
        current = net.segments[sid].to_node
    return tuple(visited)


def generate_dataset(net: RoadNetwork, cfg: GeneratorConfig) -> TrajectoryDataset:
    """Produce a deterministic synthetic dataset.

    Archetypes are uniformly sampled reachable origin/destination node pairs;
    trajectory i uses archetype ``i % n_archetypes``, jitters both endpoints
    by random out-walks of at most ``od_jitter`` hops, routes along the
    shortest path and detours at each node with ``detour_probability``.
    """
    if cfg.n_trajectories == 0:
        return TrajectoryDataset(net, [], ground_truth={})
    rng = random.Random(cfg.seed)
    node_ids = sorted(net.nodes)

    archetypes: list[tuple[int, int]] = []
    for _ in range(cfg.n_archetypes):
        for _attempt in range(_MAX_OD_ATTEMPTS):
            origin = rng.choice(node_ids)
            destination = rng.choice(node_ids)
            if origin != destination and net.shortest_path(origin, destination):
                archetypes.append((origin, destination))
                break
        else:
            raise ValidationError(
                f"no reachable origin/destination pair found after {_MAX_OD_ATTEMPTS} attempts"
            )

    trajectories: list[Trajectory] = []
    ground_truth: dict[int, int] = {}
    for tid in range(cfg.n_trajectories):
        archetype = tid % cfg.n_archetypes
        base_origin, base_destination = archetypes[archetype]
        origin, destination = base_origin, base_destination
        for _attempt in range(_MAX_OD_ATTEMPTS):
            o = _jittered(net, rng, base_origin, cfg.od_jitter)
            d = _jittered(net, rng, base_destination, cfg.od_jitter)
            if o != d and net.shortest_path(o, d):
                origin, destination = o, d
                break
        # fallback: the unjittered archetype pair, reachable by construction
        segments = _route_with_detours(net, rng, origin, destination, cfg.detour_probability)
        trajectories.append(Trajectory(tid, segments))
        ground_truth[tid] = archetype

    ds = TrajectoryDataset(net, trajectories, ground_truth=ground_truth)
    logger.debug(
        "generated %d trajectories over %d distinct segments (%d archetypes)",
        ds.n, len(ds.inverted_index), cfg.n_archetypes,
    )
    return ds
