"""Figure rendering for CLI reports. All figures are written to files."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.collections import LineCollection

from netseg.community import Partition
from netseg.evaluation import CrossedMatrix, QualityReport
from netseg.road_network import RoadNetwork
from netseg.trajectory_store import TrajectoryDataset

PathLike = Union[str, Path]

_CYCLE = plt.cm.tab20.colors


def _community_color(index: int):
    return _CYCLE[index % len(_CYCLE)]


def save_crossed_matrix_heatmap(cm: CrossedMatrix, path: PathLike) -> None:
    """Grayscale heatmap of interaction densities; darker means denser."""
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(cm.col_ids) + 2),
                                    max(3, 0.5 * len(cm.row_ids) + 1.5)))
    image = ax.imshow(cm.densities, cmap="Greys", vmin=0.0, aspect="auto")
    ax.set_xticks(range(len(cm.col_ids)), [str(c) for c in cm.col_ids])
    ax.set_yticks(range(len(cm.row_ids)), [str(r) for r in cm.row_ids])
    ax.set_xlabel("segment cluster")
    ax.set_ylabel("trajectory cluster")
    fig.colorbar(image, ax=ax, label="density")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _segment_lines(net: RoadNetwork, segment_ids) -> list:
    lines = []
    for sid in segment_ids:
        seg = net.segments[sid]
        a, b = net.nodes[seg.from_node], net.nodes[seg.to_node]
        lines.append([(a.x, a.y), (b.x, b.y)])
    return lines


def save_segment_cluster_map(net: RoadNetwork, p: Partition, path: PathLike) -> None:
    """Network map with clustered segments colored per community."""
    fig, ax = plt.subplots(figsize=(8, 8))
    background = [s for s in net.segments if s not in p.membership]
    if background:
        ax.add_collection(LineCollection(_segment_lines(net, background),
                                         colors="0.85", linewidths=0.6))
    for index, members in enumerate(p.communities()):
        ax.add_collection(LineCollection(_segment_lines(net, members),
                                         colors=[_community_color(index)],
                                         linewidths=1.4))
    ax.autoscale()
    ax.set_aspect("equal")
    ax.set_title(f"{p.k} segment clusters")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_trajectory_cluster_map(net: RoadNetwork, ds: TrajectoryDataset,
                                p: Partition, path: PathLike) -> None:
    """Network map with each trajectory drawn in its cluster's color."""
    fig, ax = plt.subplots(figsize=(8, 8))
    ax.add_collection(LineCollection(_segment_lines(net, sorted(net.segments)),
                                     colors="0.9", linewidths=0.5))
    for tid in sorted(p.membership):
        color = _community_color(p.membership[tid])
        segs = ds.trajectories[tid].segments
        ax.add_collection(LineCollection(_segment_lines(net, segs),
                                         colors=[color], linewidths=1.2, alpha=0.7))
    ax.autoscale()
    ax.set_aspect("equal")
    ax.set_title(f"{p.k} trajectory clusters")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_quality_bars(report: QualityReport, path: PathLike) -> None:
    fig, ax = plt.subplots(figsize=(max(4, 0.3 * report.k + 2), 4))
    clusters = sorted(report.per_cluster)
    ax.bar([str(c) for c in clusters], [report.per_cluster[c] for c in clusters],
           color="steelblue")
    ax.set_xlabel("cluster")
    ax.set_ylabel("quality")
    ax.set_title(f"total quality {report.total:.4g} over {report.k} clusters")
    if report.k > 25:
        ax.tick_params(axis="x", labelsize=6, rotation=90)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_experiment_bars(rows: Sequence[Mapping], path: PathLike) -> None:
    """Grouped bars of per-dataset quality for the three methods."""
    fig, ax = plt.subplots(figsize=(max(6, 1.6 * len(rows)), 4.5))
    width = 0.27
    methods = [("labelprop_quality", "label propagation", "darkorange"),
               ("spectral_quality", "spectral", "seagreen"),
               ("modularity_quality", "modularity", "steelblue")]
    for slot, (key, label, color) in enumerate(methods):
        xs = [i + (slot - 1) * width for i in range(len(rows))]
        ax.bar(xs, [row[key] for row in rows], width=width, label=label, color=color)
    ax.set_xticks(range(len(rows)), [str(row["dataset"]) for row in rows])
    ax.set_xlabel("dataset")
    ax.set_ylabel("partition quality")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
