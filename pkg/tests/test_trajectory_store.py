import io

import pytest

from netseg.errors import ValidationError
from netseg.trajectory_store import (GeneratorConfig, Trajectory,
                                     TrajectoryDataset, dataset_stats,
                                     generate_dataset, load_ground_truth,
                                     load_trajectories, write_ground_truth,
                                     write_trajectories)

from helpers import (chain_network, disconnected_regions_network,
                     grid_network)


def test_load_single_trajectory():
    net = chain_network(5)
    ds = load_trajectories(net, io.StringIO("7;0,1,2\n"))
    assert ds.n == 1
    assert ds.trajectories[7].length == 3
    assert ds.inverted_index[1] == {7: 1}


def test_broken_chain_reports_position():
    net = chain_network(5)
    with pytest.raises(ValidationError, match=r"trajectory 3.*positions 1 and 2"):
        load_trajectories(net, io.StringIO("3;0,1,3\n"))


def test_unknown_segment_and_duplicate_id():
    net = chain_network(3)
    with pytest.raises(ValidationError, match="unknown segment id 9"):
        load_trajectories(net, io.StringIO("0;0,9\n"))
    with pytest.raises(ValidationError, match="duplicate trajectory id 1"):
        load_trajectories(net, io.StringIO("1;0\n1;1\n"))
    with pytest.raises(ValidationError, match="no segments"):
        load_trajectories(net, io.StringIO("1;\n"))
    with pytest.raises(ValidationError, match="missing ';'"):
        load_trajectories(net, io.StringIO("1,0,1\n"))


def test_shared_segment_counts():
    net = chain_network(8)
    ds = load_trajectories(net, io.StringIO("0;4,5,6\n1;5,6\n2;3,4,5\n"))
    assert ds.visitors(5) == frozenset({0, 1, 2})
    assert ds.visit_total(5) == 3


def test_repeat_visits_counted():
    # cycle 0->1->2->0 lets a trajectory revisit segment 0
    from netseg.road_network import build_network
    net = build_network(
        [(0, 0, 0), (1, 1, 0), (2, 2, 0)],
        [(0, 0, 1), (1, 1, 2), (2, 2, 0)],
    )
    ds = load_trajectories(net, io.StringIO("0;0,1,2,0\n"))
    assert ds.visit_count(0, 0) == 2
    assert ds.visit_total(0) == 2


def test_transpose_identity():
    net = grid_network(5)
    ds = generate_dataset(net, GeneratorConfig(30, 3, 0.2, 2, seed=5))
    total_visits = sum(t.length for t in ds.trajectories.values())
    index_total = sum(sum(c.values()) for c in ds.inverted_index.values())
    assert index_total == total_visits
    for sid, counts in ds.inverted_index.items():
        for tid, count in counts.items():
            assert ds.trajectories[tid].segments.count(sid) == count


def test_generator_empty():
    net = grid_network(3)
    ds = generate_dataset(net, GeneratorConfig(0, 2, seed=1))
    assert ds.n == 0
    stats = dataset_stats(ds)
    assert stats.n == 0 and stats.distinct_segments == 0


def test_generator_deterministic(tmp_path):
    net = grid_network(6)
    cfg = GeneratorConfig(25, 4, 0.25, 2, seed=99)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trajectories(generate_dataset(net, cfg), a)
    write_trajectories(generate_dataset(net, cfg), b)
    assert a.read_bytes() == b.read_bytes()


def test_generated_trajectories_are_chain_connected():
    net = grid_network(6)
    ds = generate_dataset(net, GeneratorConfig(40, 5, 0.3, 3, seed=2))
    # TrajectoryDataset re-validates on construction; also re-check directly
    for t in ds.trajectories.values():
        assert t.length >= 1
        for a, b in zip(t.segments, t.segments[1:]):
            assert net.are_connected(a, b)


def test_generator_round_robin_ground_truth():
    net = grid_network(5)
    ds = generate_dataset(net, GeneratorConfig(10, 3, seed=4))
    assert ds.ground_truth == {i: i % 3 for i in range(10)}


def test_generator_respects_unreachable_regions():
    # three mutually unreachable regions: every trajectory stays inside one
    net = disconnected_regions_network(grid=4, regions=3)
    ds = generate_dataset(net, GeneratorConfig(30, 3, 0.3, 2, seed=11))
    for t in ds.trajectories.values():
        regions = {net.segments[s].from_node // 16 for s in t.segments}
        regions |= {net.segments[s].to_node // 16 for s in t.segments}
        assert len(regions) == 1


def test_generator_od_exhaustion_error():
    # only a tiny fraction of pairs is reachable: sampling exhausts its budget
    from netseg.road_network import build_network
    nodes = [(i, float(i), 0.0) for i in range(200)]
    net = build_network(nodes, [(0, 0, 1), (1, 1, 0)])
    with pytest.raises(ValidationError, match="after 100 attempts"):
        generate_dataset(net, GeneratorConfig(5, 3, seed=0))


def test_ground_truth_round_trip(tmp_path):
    net = grid_network(4)
    ds = generate_dataset(net, GeneratorConfig(12, 4, seed=3))
    path = tmp_path / "truth.csv"
    write_ground_truth(ds, path)
    assert load_ground_truth(path) == ds.ground_truth


def test_dataset_stats_counts():
    net = chain_network(6)
    ds = load_trajectories(net, io.StringIO("0;0,1,2\n"))
    stats = dataset_stats(ds)
    assert (stats.n, stats.distinct_segments) == (1, 3)
    assert (stats.min_length, stats.max_length) == (3, 3)
    net2 = grid_network(6)
    generated = generate_dataset(net2, GeneratorConfig(100, 5, 0.1, 1, seed=8))
    assert dataset_stats(generated).distinct_segments == len(generated.inverted_index)


def test_config_validation():
    with pytest.raises(ValidationError):
        GeneratorConfig(-1, 1)
    with pytest.raises(ValidationError):
        GeneratorConfig(1, 0)
    with pytest.raises(ValidationError):
        GeneratorConfig(1, 1, detour_probability=1.5)
    with pytest.raises(ValidationError):
        GeneratorConfig(1, 1, od_jitter=-2)


def test_dataset_rejects_stale_ids():
    net = chain_network(4)
    with pytest.raises(ValidationError, match="unknown segment id 77"):
        TrajectoryDataset(net, [Trajectory(0, (0, 77))])
