"""netseg: cluster road segments and trajectories of network-constrained
movement data via shared-trajectory similarity graphs and hierarchical
modularity-based community detection."""

__version__ = "0.1.0"

from netseg.errors import ValidationError
from netseg.road_network import RoadNetwork, load_network
from netseg.trajectory_store import (GeneratorConfig, TrajectoryDataset,
                                     dataset_stats, generate_dataset,
                                     load_trajectories)
from netseg.similarity import (SimilarityGraph, build_segment_similarity_graph,
                               build_trajectory_similarity_graph,
                               segment_similarity, segment_weight)
from netseg.community import (ClusterHierarchy, NullModelConfig, Partition,
                              greedy_partition, hierarchical_cluster,
                              modularity, refine_partition, test_significance)
from netseg.baselines import (LabelPropConfig, SpectralConfig,
                              label_propagation, spectral_clustering)
from netseg.evaluation import (adjusted_rand_index, cluster_summary,
                               crossed_matrix, partition_quality)

__all__ = [
    "ValidationError",
    "RoadNetwork", "load_network",
    "GeneratorConfig", "TrajectoryDataset", "dataset_stats", "generate_dataset",
    "load_trajectories",
    "SimilarityGraph", "build_segment_similarity_graph",
    "build_trajectory_similarity_graph", "segment_similarity", "segment_weight",
    "ClusterHierarchy", "NullModelConfig", "Partition", "greedy_partition",
    "hierarchical_cluster", "modularity", "refine_partition", "test_significance",
    "LabelPropConfig", "SpectralConfig", "label_propagation", "spectral_clustering",
    "adjusted_rand_index", "cluster_summary", "crossed_matrix", "partition_quality",
]
