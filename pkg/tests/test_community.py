import random

import pytest

from netseg.community import (NullModelConfig, Partition,
                              _rewired_null, greedy_partition,
                              hierarchical_cluster, level_modularities,
                              load_hierarchy, load_partition, modularity,
                              refine_partition, write_hierarchy,
                              write_partition)
from netseg.community import test_significance as significance_of
from netseg.errors import ValidationError
from netseg.similarity import SimilarityGraph

from helpers import (assert_hierarchy_valid, best_partition_by_enumeration,
                     four_clique_pairs_graph, improving_merge_exists,
                     improving_move_exists, random_similarity_graph,
                     two_cliques_graph, two_triangle_graph)

import numpy as np


def labels(mapping):
    return Partition.from_labels(mapping)


def test_modularity_two_triangle_values():
    g = two_triangle_graph()
    triangles = labels({0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1})
    assert modularity(g, triangles) == pytest.approx(5 / 14, abs=1e-12)
    single = labels({v: 0 for v in range(6)})
    assert modularity(g, single) == 0.0
    singletons = labels({v: v for v in range(6)})
    assert modularity(g, singletons) == pytest.approx(-34 / 196, abs=1e-12)


def test_modularity_single_community_always_zero():
    rng = random.Random(0)
    for _ in range(10):
        g = random_similarity_graph(rng, rng.randint(2, 15))
        p = labels({v: 0 for v in g.vertices})
        assert modularity(g, p) == pytest.approx(0.0, abs=1e-12)


def test_modularity_bounds():
    rng = random.Random(1)
    for _ in range(20):
        g = random_similarity_graph(rng, rng.randint(2, 12))
        for _ in range(5):
            p = labels({v: rng.randrange(3) for v in g.vertices})
            q = modularity(g, p)
            assert -0.5 - 1e-12 <= q <= 1.0 + 1e-12


def test_modularity_edgeless_graph_is_zero():
    g = SimilarityGraph.from_edges([1, 2, 3], [])
    assert modularity(g, labels({1: 0, 2: 1, 3: 2})) == 0.0


def test_modularity_cover_mismatch():
    g = two_triangle_graph()
    with pytest.raises(ValidationError, match="cover"):
        modularity(g, labels({0: 0, 1: 0}))


def test_greedy_two_triangles_is_global_optimum():
    g = two_triangle_graph()
    p = greedy_partition(g, _verify=True)
    assert p.membership == {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
    best_q, best_p = best_partition_by_enumeration(g)
    assert modularity(g, p) == pytest.approx(best_q, abs=1e-12)
    assert p.membership == best_p.membership


def test_greedy_two_disjoint_cliques():
    edges = ([(a, b, 1.0) for a in range(4) for b in range(a + 1, 4)] +
             [(a, b, 1.0) for a in range(4, 8) for b in range(a + 1, 8)])
    g = SimilarityGraph.from_edges(range(8), edges)
    p = greedy_partition(g)
    assert p.k == 2
    assert {frozenset(c) for c in map(tuple, p.communities())} == {
        frozenset(range(4)), frozenset(range(4, 8))}
    best_q, _ = best_partition_by_enumeration(g)  # Bell(8) = 4140 partitions
    assert modularity(g, p) == pytest.approx(best_q, abs=1e-12)


def test_greedy_single_vertex():
    g = SimilarityGraph.from_edges([5], [])
    p = greedy_partition(g)
    assert p.k == 1 and modularity(g, p) == 0.0


def test_greedy_empty_graph_errors():
    g = SimilarityGraph.from_edges([], [])
    with pytest.raises(ValidationError):
        greedy_partition(g)


def test_greedy_incremental_gains_match_full_recompute():
    rng = random.Random(17)
    for _ in range(10):
        g = random_similarity_graph(rng, rng.randint(4, 40), p=0.3)
        greedy_partition(g, _verify=True)  # raises if any step drifts > 1e-10


def test_greedy_locally_optimal_small_graphs():
    rng = random.Random(23)
    for _ in range(12):
        g = random_similarity_graph(rng, rng.randint(2, 14), p=0.5)
        p = greedy_partition(g)
        assert not improving_merge_exists(g, p)
        assert not improving_move_exists(g, p)


def test_refine_fixpoint_identity():
    g = two_triangle_graph()
    optimal = labels({0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1})
    assert refine_partition(g, optimal) == optimal


def test_refine_corrects_misassignment():
    g = two_triangle_graph()
    wrong = labels({0: 0, 1: 0, 2: 0, 3: 0, 4: 1, 5: 1})  # vertex 3 misplaced
    fixed = refine_partition(g, wrong, _verify=True)
    assert fixed.membership == {0: 0, 1: 0, 2: 0, 3: 1, 4: 1, 5: 1}
    assert modularity(g, fixed) == pytest.approx(5 / 14, abs=1e-12)


def test_refine_never_decreases_modularity():
    rng = random.Random(31)
    for _ in range(10):
        g = random_similarity_graph(rng, rng.randint(3, 20), p=0.4)
        p = labels({v: rng.randrange(4) for v in g.vertices})
        q_before = modularity(g, p)
        refined = refine_partition(g, p)
        assert modularity(g, refined) >= q_before - 1e-12


def test_refine_compacts_indices():
    g = two_triangle_graph()
    sparse_labels = {0: 4, 1: 4, 2: 4, 3: 9, 4: 9, 5: 9}
    out = refine_partition(g, Partition(membership=sparse_labels, k=10))
    assert sorted(set(out.membership.values())) == list(range(out.k))


def test_significance_size_guard():
    g = SimilarityGraph.from_edges([0, 1, 2], [(0, 1, 1.0), (1, 2, 1.0)])
    p = greedy_partition(g)
    result = significance_of(g, p, NullModelConfig(min_subgraph_size=4, seed=0))
    assert not result.significant
    assert result.reason == "below_min_size"


def test_significance_single_community_guard():
    edges = [(a, b, 1.0) for a in range(5) for b in range(a + 1, 5)]
    g = SimilarityGraph.from_edges(range(5), edges)
    p = greedy_partition(g)
    assert p.k == 1
    result = significance_of(g, p, NullModelConfig(seed=0))
    assert not result.significant
    assert result.reason == "single_community"


def test_significance_planted_cliques():
    g = two_cliques_graph(size=6)
    p = greedy_partition(g)
    assert p.k == 2
    result = significance_of(g, p, NullModelConfig(replicates=30, seed=7))
    assert result.significant
    assert result.reason == "tested"
    assert result.replicates == 30
    assert result.z_score > 2.0
    assert result.q_observed > result.null_mean


def test_significance_zero_variance_degenerate():
    # two disjoint unit edges: every rewiring attempt fails, weights are equal,
    # so all null modularities coincide with the observed one
    g = SimilarityGraph.from_edges(range(4), [(0, 1, 1.0), (2, 3, 1.0)])
    p = greedy_partition(g)
    result = significance_of(g, p, NullModelConfig(replicates=5, seed=1))
    assert result.null_std == 0.0
    assert not result.significant  # q_obs == mean, not greater


def test_rewired_null_preserves_degree_sequence_and_weights():
    rng = random.Random(13)
    g = random_similarity_graph(rng, 14, p=0.4)
    null = _rewired_null(g, np.random.default_rng(3))
    assert null.vertices == g.vertices
    assert null.edge_count == g.edge_count
    # endpoint counts (unweighted degrees) are preserved
    def degree_hist(graph):
        return {v: len(graph.adj[v]) for v in graph.vertices}
    assert degree_hist(null) == degree_hist(g)
    assert sorted(w for _, _, w in null.edges()) == pytest.approx(
        sorted(w for _, _, w in g.edges()))


def test_hierarchy_depth_one_on_two_cliques():
    g = two_cliques_graph(size=6)
    h = hierarchical_cluster(g, NullModelConfig(seed=5))
    assert h.max_level == 1
    assert len(h.roots) == 2
    assert_hierarchy_valid(h)
    for root in h.roots:
        assert root.diagnostics is not None
        assert root.diagnostics.reason == "single_community"


def test_hierarchy_four_clique_pairs():
    g = four_clique_pairs_graph()
    h = hierarchical_cluster(g, NullModelConfig(seed=9))
    assert_hierarchy_valid(h)
    assert h.max_level >= 2
    level1 = {frozenset(root.vertices) for root in h.roots}
    assert level1 == {frozenset(range(16)), frozenset(range(16, 32))}
    cliques = {frozenset(range(i * 8, (i + 1) * 8)) for i in range(4)}
    level2 = {frozenset(n.vertices) for n in h.level_cut(2)}
    assert level2 == cliques


def test_hierarchy_diagnostics_present():
    g = four_clique_pairs_graph()
    h = hierarchical_cluster(g, NullModelConfig(seed=9))
    for node in h.nodes():
        assert node.diagnostics is not None
        if node.children:
            assert node.significant
            assert node.split_modularity is not None


def test_hierarchy_determinism_and_export_round_trip(tmp_path):
    g = four_clique_pairs_graph()
    paths = []
    for run in range(2):
        h = hierarchical_cluster(g, NullModelConfig(seed=3), seed=1)
        nodes_path = tmp_path / f"nodes_{run}.csv"
        members_path = tmp_path / f"members_{run}.csv"
        write_hierarchy(h, nodes_path, members_path)
        paths.append((nodes_path, members_path))
    assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
    assert paths[0][1].read_bytes() == paths[1][1].read_bytes()

    reloaded = load_hierarchy(*paths[0])
    original = hierarchical_cluster(g, NullModelConfig(seed=3), seed=1)
    assert [n.id for n in reloaded.nodes()] == [n.id for n in original.nodes()]
    for a, b in zip(reloaded.nodes(), original.nodes()):
        assert a.vertices == b.vertices
        assert a.level == b.level
        assert a.significant == b.significant


def test_hierarchy_level_cut_and_errors():
    g = four_clique_pairs_graph()
    h = hierarchical_cluster(g, NullModelConfig(seed=9))
    p1 = h.partition_at_level(1)
    assert p1.k == 2
    with pytest.raises(ValidationError, match="unknown hierarchy level"):
        h.level_cut(h.max_level + 1)
    with pytest.raises(ValidationError, match="unknown hierarchy level"):
        h.partition_at_level(0)


def test_level_modularities_recorded():
    g = four_clique_pairs_graph()
    h = hierarchical_cluster(g, NullModelConfig(seed=9))
    per_level = level_modularities(g, h)
    assert set(per_level) == set(range(1, h.max_level + 1))
    assert per_level[1] == pytest.approx(h.level1_modularity)


def test_hierarchy_parallel_matches_serial():
    g = four_clique_pairs_graph()
    serial = hierarchical_cluster(g, NullModelConfig(seed=3), seed=1, workers=1)
    parallel = hierarchical_cluster(g, NullModelConfig(seed=3), seed=1, workers=2)
    assert [n.vertices for n in serial.nodes()] == [n.vertices for n in parallel.nodes()]
    assert [n.significant for n in serial.nodes()] == [n.significant for n in parallel.nodes()]


def test_partition_round_trip(tmp_path):
    p = labels({3: 1, 1: 0, 7: 1, 2: 0})
    path = tmp_path / "p.csv"
    write_partition(p, path)
    assert load_partition(path) == p


def test_partition_from_labels_canonical():
    p = labels({5: 9, 1: 4, 3: 9})
    assert p.membership == {1: 0, 3: 1, 5: 1}
    assert p.k == 2


def test_null_config_validation():
    with pytest.raises(ValidationError):
        NullModelConfig(replicates=0)
    with pytest.raises(ValidationError):
        NullModelConfig(z_threshold=-1)
