"""Command-line pipeline: generate data, build graphs, cluster, evaluate,
reproduce the comparison protocol and export the explorer bundle.

Every command writes its outputs plus a ``manifest.json`` (resolved
parameters, input digests, tool version) into ``--out``; identical inputs and
flags reproduce the outputs byte for byte. Exit codes: 0 success, 1 internal
error, 2 user/input error. ``NETSEG_LOG`` (debug/info/warning/error) controls
stderr log verbosity.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

from netseg import __version__
from netseg.bundle import build_bundle, load_bundle, write_bundle
from netseg.baselines import (LabelPropConfig, SpectralConfig,
                              label_propagation, spectral_clustering,
                              spectral_decomposition)
from netseg.community import (NullModelConfig,
                              hierarchical_cluster, level_modularities,
                              load_hierarchy, load_partition, modularity,
                              write_hierarchy, write_partition)
from netseg.errors import ValidationError
from netseg.evaluation import (crossed_matrix, partition_quality,
                               write_crossed_matrix, write_quality)
from netseg import plots
from netseg.road_network import load_network
from netseg.similarity import (build_segment_similarity_graph,
                               build_trajectory_similarity_graph,
                               unvisited_segments, write_graph)
from netseg.trajectory_store import (GeneratorConfig, dataset_stats,
                                     generate_dataset, load_trajectories,
                                     write_ground_truth, write_trajectories)

logger = logging.getLogger(__name__)

# fixed offsets deriving per-stage seeds from the single --seed flag
SEED_COMMUNITY = 1000
SEED_LABELPROP = 2000
SEED_SPECTRAL = 3000
SEED_PER_DATASET = 10_000


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_dir: Path, command: str, parameters: dict,
                    inputs: list[Path], outputs: list[str]) -> None:
    doc = {
        "command": command,
        "version": __version__,
        "parameters": parameters,
        "input_digests": {str(p): _sha256(p) for p in inputs},
        "outputs": sorted(outputs),
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_inputs(args):
    net = load_network(args.nodes, args.segments)
    ds = load_trajectories(net, args.trajectories)
    return net, ds


def _parameters(args, skip=("handler",)) -> dict:
    return {k: str(v) if isinstance(v, Path) else v
            for k, v in sorted(vars(args).items()) if k not in skip}


# --- commands ------------------------------------------------------------------

def cmd_generate(args) -> int:
    out = _out_dir(args)
    net = load_network(args.nodes, args.segments)
    cfg = GeneratorConfig(
        n_trajectories=args.n,
        n_archetypes=args.archetypes,
        detour_probability=args.detour,
        od_jitter=args.jitter,
        seed=args.seed,
    )
    ds = generate_dataset(net, cfg)
    write_trajectories(ds, out / "trajectories.csv")
    write_ground_truth(ds, out / "ground_truth.csv")
    stats = dataset_stats(ds)
    print(f"trajectories: {stats.n}")
    print(f"distinct segments: {stats.distinct_segments}")
    print(f"length min/mean/max: {stats.min_length}/{stats.mean_length:.2f}/{stats.max_length}")
    _write_manifest(out, "generate", _parameters(args),
                    [Path(args.nodes), Path(args.segments)],
                    ["trajectories.csv", "ground_truth.csv"])
    return 0


def _build_graph(args, ds):
    if args.graph == "segments":
        return build_segment_similarity_graph(ds)
    return build_trajectory_similarity_graph(ds)


def cmd_simgraph(args) -> int:
    out = _out_dir(args)
    _net, ds = _load_inputs(args)
    g = _build_graph(args, ds)
    write_graph(g, out / "graph_edges.csv", out / "graph_vertices.csv")
    print(f"vertices: {g.vertex_count}")
    print(f"edges: {g.edge_count}")
    if args.graph == "segments":
        print(f"unvisited segments (excluded): {len(unvisited_segments(ds))}")
    _write_manifest(out, "simgraph", _parameters(args),
                    [Path(args.nodes), Path(args.segments), Path(args.trajectories)],
                    ["graph_edges.csv", "graph_vertices.csv"])
    return 0


def _closest_level(hierarchy, target_k: int) -> int:
    best_level = 1
    best_gap = None
    for level in range(1, hierarchy.max_level + 1):
        gap = abs(len(hierarchy.level_cut(level)) - target_k)
        if best_gap is None or gap < best_gap:
            best_gap = gap
            best_level = level
    return best_level


def cmd_cluster(args) -> int:
    out = _out_dir(args)
    net, ds = _load_inputs(args)
    g = _build_graph(args, ds)
    outputs: list[str] = []
    target_k = None
    if args.match_k:
        target_k = load_partition(args.match_k).k
        print(f"matched cluster count target: {target_k}")

    derived = {"community": args.seed + SEED_COMMUNITY,
               "labelprop": args.seed + SEED_LABELPROP,
               "spectral": args.seed + SEED_SPECTRAL}
    if args.method == "modularity":
        cfg = NullModelConfig(replicates=args.replicates, z_threshold=args.z_threshold,
                              min_subgraph_size=args.min_size,
                              seed=args.seed + SEED_COMMUNITY)
        hierarchy = hierarchical_cluster(g, cfg, seed=args.seed, workers=args.threads)
        write_hierarchy(hierarchy, out / "hierarchy_nodes.csv",
                        out / "hierarchy_membership.csv")
        outputs += ["hierarchy_nodes.csv", "hierarchy_membership.csv"]
        for level, q in level_modularities(g, hierarchy).items():
            print(f"level {level}: K={len(hierarchy.level_cut(level))} modularity={q:.6g}")
        partition = hierarchy.partition_at_level(1)
        write_partition(partition, out / "partition_level1.csv")
        outputs.append("partition_level1.csv")
        if target_k is not None:
            level = _closest_level(hierarchy, target_k)
            partition = hierarchy.partition_at_level(level)
            print(f"selected level {level} (K={partition.k}) for target K={target_k}")
            write_partition(partition, out / "partition_matched.csv")
            outputs.append("partition_matched.csv")
    elif args.method == "labelprop":
        if args.match_k:
            logger.warning("label propagation is parameter-free; --match-k has no effect")
        cfg = LabelPropConfig(max_rounds=args.max_rounds, seed=args.seed + SEED_LABELPROP)
        partition = label_propagation(g, cfg)
        write_partition(partition, out / "partition.csv")
        outputs.append("partition.csv")
    else:  # spectral
        k = args.k if args.k is not None else target_k
        if k is None:
            raise ValidationError("spectral clustering needs --k or --match-k")
        cfg = SpectralConfig(k=k, kmeans_restarts=args.restarts,
                             eig_tolerance=args.eig_tolerance,
                             seed=args.seed + SEED_SPECTRAL)
        partition = spectral_clustering(g, cfg)
        write_partition(partition, out / "partition.csv")
        outputs.append("partition.csv")

    print(f"K: {partition.k}")
    if args.graph == "segments":
        report = partition_quality(ds, partition)
        print(f"quality: {report.total:.6g}")
        if not args.no_figures:
            plots.save_segment_cluster_map(net, partition, out / "cluster_map.png")
            outputs.append("cluster_map.png")
    else:
        print(f"modularity: {modularity(g, partition):.6g}")
        if not args.no_figures:
            plots.save_trajectory_cluster_map(net, ds, partition, out / "cluster_map.png")
            outputs.append("cluster_map.png")
    _write_manifest(out, "cluster", dict(_parameters(args), derived_seeds=derived),
                    [Path(args.nodes), Path(args.segments), Path(args.trajectories)],
                    outputs)
    return 0


def cmd_evaluate(args) -> int:
    out = _out_dir(args)
    _net, ds = _load_inputs(args)
    partition = load_partition(args.partition)
    report = partition_quality(ds, partition)
    write_quality(report, out / "quality.csv")
    outputs = ["quality.csv"]
    print(f"K: {report.k}")
    print(f"quality: {report.total:.6g}")
    if not args.no_figures:
        plots.save_quality_bars(report, out / "quality.png")
        outputs.append("quality.png")
    _write_manifest(out, "evaluate", _parameters(args),
                    [Path(args.nodes), Path(args.segments), Path(args.trajectories),
                     Path(args.partition)], outputs)
    return 0


def cmd_crossmatrix(args) -> int:
    out = _out_dir(args)
    _net, ds = _load_inputs(args)
    tp = load_partition(args.trajectory_partition)
    sp = load_partition(args.segment_partition)
    cm = crossed_matrix(ds, tp, sp)
    write_crossed_matrix(cm, out / "crossed_counts.csv", out / "crossed_densities.csv")
    outputs = ["crossed_counts.csv", "crossed_densities.csv"]
    print(f"rows (trajectory clusters): {len(cm.row_ids)}")
    print(f"cols (segment clusters): {len(cm.col_ids)}")
    if not args.no_figures:
        plots.save_crossed_matrix_heatmap(cm, out / "crossed_matrix.png")
        outputs.append("crossed_matrix.png")
    _write_manifest(out, "crossmatrix", _parameters(args),
                    [Path(args.nodes), Path(args.segments), Path(args.trajectories),
                     Path(args.trajectory_partition), Path(args.segment_partition)],
                    outputs)
    return 0


def _experiment_row(name: str, net, ds, args, dataset_seed: int) -> dict:
    g = build_segment_similarity_graph(ds)
    null_cfg = NullModelConfig(replicates=args.replicates, z_threshold=args.z_threshold,
                               min_subgraph_size=args.min_size,
                               seed=dataset_seed + SEED_COMMUNITY)
    hierarchy = hierarchical_cluster(g, null_cfg, seed=dataset_seed, workers=args.threads)
    p_level1 = hierarchy.partition_at_level(1)
    q_mod_1 = partition_quality(ds, p_level1).total

    decomposition = spectral_decomposition(g)  # reused for both target k
    spec_1 = spectral_clustering(g, SpectralConfig(
        k=p_level1.k, seed=dataset_seed + SEED_SPECTRAL), decomposition)
    q_spec_1 = partition_quality(ds, spec_1).total

    lp = label_propagation(g, LabelPropConfig(seed=dataset_seed + SEED_LABELPROP))
    q_lp = partition_quality(ds, lp).total

    spec_2 = spectral_clustering(g, SpectralConfig(
        k=lp.k, seed=dataset_seed + SEED_SPECTRAL), decomposition)
    q_spec_2 = partition_quality(ds, spec_2).total

    matched_level = _closest_level(hierarchy, lp.k)
    p_matched = hierarchy.partition_at_level(matched_level)
    q_mod_2 = partition_quality(ds, p_matched).total

    return {
        "dataset": name,
        "level1_k": p_level1.k,
        "spectral_quality_level1": q_spec_1,
        "modularity_quality_level1": q_mod_1,
        "labelprop_quality": q_lp,
        "labelprop_k": lp.k,
        "spectral_quality": q_spec_2,
        "spectral_k": spec_2.k,
        "modularity_quality": q_mod_2,
        "modularity_k": p_matched.k,
        "modularity_level": matched_level,
    }


def cmd_experiment(args) -> int:
    out = _out_dir(args)
    net = load_network(args.nodes, args.segments)
    dataset_dir = Path(args.datasets)
    files = sorted(
        p for p in dataset_dir.glob("*.csv")
        if "truth" not in p.name and p.name != "manifest.json"
    )
    if not files:
        raise ValidationError(f"no dataset files found in {dataset_dir}")
    rows = []
    for index, path in enumerate(files):
        ds = load_trajectories(net, path)
        row = _experiment_row(path.stem, net, ds, args,
                              args.seed + index * SEED_PER_DATASET)
        rows.append(row)
        logger.info("dataset %s done: %s", path.stem, row)

    with open(out / "comparison_level1.csv", "w") as fh:
        fh.write("dataset,k,spectral_quality,modularity_quality\n")
        for row in rows:
            fh.write(f"{row['dataset']},{row['level1_k']},"
                     f"{row['spectral_quality_level1']:.9g},"
                     f"{row['modularity_quality_level1']:.9g}\n")
    with open(out / "comparison_matched.csv", "w") as fh:
        fh.write("dataset,labelprop_quality,labelprop_k,spectral_quality,spectral_k,"
                 "modularity_quality,modularity_k\n")
        for row in rows:
            fh.write(f"{row['dataset']},{row['labelprop_quality']:.9g},{row['labelprop_k']},"
                     f"{row['spectral_quality']:.9g},{row['spectral_k']},"
                     f"{row['modularity_quality']:.9g},{row['modularity_k']}\n")

    print("matched to the modularity level-1 cluster count:")
    print(f"{'dataset':<16}{'K':>5}{'spectral':>12}{'modularity':>12}")
    for row in rows:
        print(f"{row['dataset']:<16}{row['level1_k']:>5}"
              f"{row['spectral_quality_level1']:>12.2f}"
              f"{row['modularity_quality_level1']:>12.2f}")
    print("\nmatched to the label-propagation cluster count:")
    print(f"{'dataset':<16}{'labelprop':>14}{'spectral':>14}{'modularity':>14}")
    for row in rows:
        print(f"{row['dataset']:<16}"
              f"{row['labelprop_quality']:>8.2f} ({row['labelprop_k']:>3})"
              f"{row['spectral_quality']:>9.2f} ({row['spectral_k']:>3})"
              f"{row['modularity_quality']:>9.2f} ({row['modularity_k']:>3})")

    outputs = ["comparison_level1.csv", "comparison_matched.csv"]
    if not args.no_figures:
        plots.save_experiment_bars(rows, out / "experiment_quality.png")
        outputs.append("experiment_quality.png")
    derived = {path.stem: args.seed + index * SEED_PER_DATASET
               for index, path in enumerate(files)}
    _write_manifest(out, "experiment", dict(_parameters(args), derived_seeds=derived),
                    [Path(args.nodes), Path(args.segments), *files], outputs)
    return 0


def cmd_export_bundle(args) -> int:
    out = _out_dir(args)
    _net, ds = _load_inputs(args)
    seg_dir = Path(args.segment_hierarchy)
    traj_dir = Path(args.trajectory_hierarchy)
    seg_hierarchy = load_hierarchy(seg_dir / "hierarchy_nodes.csv",
                                   seg_dir / "hierarchy_membership.csv")
    traj_hierarchy = load_hierarchy(traj_dir / "hierarchy_nodes.csv",
                                    traj_dir / "hierarchy_membership.csv")
    seg_graph = build_segment_similarity_graph(ds)
    traj_graph = build_trajectory_similarity_graph(ds)
    doc = build_bundle(ds, seg_graph, traj_graph, seg_hierarchy, traj_hierarchy)
    write_bundle(doc, out / "bundle.json")
    print(f"bundle written: {out / 'bundle.json'}")
    print(f"crossed matrices: {len(doc['crossed_matrices'])} level pair(s)")
    _write_manifest(out, "export-bundle", _parameters(args),
                    [Path(args.nodes), Path(args.segments), Path(args.trajectories),
                     seg_dir / "hierarchy_nodes.csv", seg_dir / "hierarchy_membership.csv",
                     traj_dir / "hierarchy_nodes.csv", traj_dir / "hierarchy_membership.csv"],
                    ["bundle.json"])
    return 0


def cmd_validate_bundle(args) -> int:
    load_bundle(args.bundle)
    print("bundle is valid")
    return 0


# --- parser --------------------------------------------------------------------

def _add_network_args(sub) -> None:
    sub.add_argument("--nodes", required=True, help="nodes CSV (node_id,x,y)")
    sub.add_argument("--segments", required=True,
                     help="segments CSV (segment_id,from_node,to_node)")


def _add_dataset_args(sub) -> None:
    _add_network_args(sub)
    sub.add_argument("--trajectories", required=True,
                     help="trajectory file (trajectory_id;seg_1,seg_2,...)")


def _add_common(sub, figures: bool = False) -> None:
    sub.add_argument("--out", required=True, help="output directory")
    sub.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    sub.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                     help="worker bound for parallel sections")
    if figures:
        sub.add_argument("--no-figures", action="store_true",
                         help="skip rendering PNG figures")


def _add_nullmodel_args(sub) -> None:
    sub.add_argument("--replicates", type=int, default=30,
                     help="null-model replicates (default 30)")
    sub.add_argument("--z-threshold", type=float, default=2.0,
                     help="significance z threshold (default 2.0)")
    sub.add_argument("--min-size", type=int, default=4,
                     help="smallest subgraph considered for subdivision (default 4)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netseg",
        description="cluster road segments and trajectories from shared-trajectory similarity graphs",
    )
    parser.add_argument("--version", action="version", version=f"netseg {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("generate", help="generate a synthetic trajectory dataset")
    _add_network_args(gen)
    gen.add_argument("--n", type=int, required=True, help="number of trajectories")
    gen.add_argument("--archetypes", type=int, default=5,
                     help="number of origin/destination archetypes (default 5)")
    gen.add_argument("--detour", type=float, default=0.0,
                     help="per-node detour probability (default 0)")
    gen.add_argument("--jitter", type=int, default=0,
                     help="max hops of origin/destination jitter (default 0)")
    _add_common(gen)
    gen.set_defaults(handler=cmd_generate)

    sim = subs.add_parser("simgraph", help="build and export a similarity graph")
    _add_dataset_args(sim)
    sim.add_argument("--graph", choices=["segments", "trajectories"], default="segments")
    _add_common(sim)
    sim.set_defaults(handler=cmd_simgraph)

    clu = subs.add_parser("cluster", help="cluster a similarity graph")
    _add_dataset_args(clu)
    clu.add_argument("--graph", choices=["segments", "trajectories"], default="segments")
    clu.add_argument("--method", choices=["modularity", "labelprop", "spectral"],
                     required=True)
    clu.add_argument("--k", type=int, default=None, help="cluster count (spectral)")
    clu.add_argument("--match-k", default=None, metavar="PARTITION_CSV",
                     help="target the cluster count of a prior partition export")
    clu.add_argument("--max-rounds", type=int, default=100,
                     help="label propagation round cap (default 100)")
    clu.add_argument("--restarts", type=int, default=8,
                     help="k-means restarts for spectral (default 8)")
    clu.add_argument("--eig-tolerance", type=float, default=1e-9,
                     help="relative eigensolver tolerance (default 1e-9)")
    _add_nullmodel_args(clu)
    _add_common(clu, figures=True)
    clu.set_defaults(handler=cmd_cluster)

    ev = subs.add_parser("evaluate", help="quality of a segment partition")
    _add_dataset_args(ev)
    ev.add_argument("--partition", required=True, help="partition CSV (vertex_id,community)")
    _add_common(ev, figures=True)
    ev.set_defaults(handler=cmd_evaluate)

    cross = subs.add_parser("crossmatrix",
                            help="cross trajectory clusters with segment clusters")
    _add_dataset_args(cross)
    cross.add_argument("--trajectory-partition", required=True)
    cross.add_argument("--segment-partition", required=True)
    _add_common(cross, figures=True)
    cross.set_defaults(handler=cmd_crossmatrix)

    exp = subs.add_parser("experiment",
                          help="three-way comparison over a directory of datasets")
    _add_network_args(exp)
    exp.add_argument("--datasets", required=True,
                     help="directory of trajectory CSVs (files with 'truth' in the name are skipped)")
    _add_nullmodel_args(exp)
    _add_common(exp, figures=True)
    exp.set_defaults(handler=cmd_experiment)

    bun = subs.add_parser("export-bundle", help="write the explorer UI bundle")
    _add_dataset_args(bun)
    bun.add_argument("--segment-hierarchy", required=True,
                     help="directory holding the segment hierarchy exports")
    bun.add_argument("--trajectory-hierarchy", required=True,
                     help="directory holding the trajectory hierarchy exports")
    _add_common(bun)
    bun.set_defaults(handler=cmd_export_bundle)

    val = subs.add_parser("validate-bundle", help="validate an explorer bundle file")
    val.add_argument("--bundle", required=True)
    val.set_defaults(handler=cmd_validate_bundle)

    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("NETSEG_LOG", "warning").upper()
    level = getattr(logging, level_name, None)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BrokenPipeError:
        return 1
    except Exception as exc:  # internal failure
        logger.exception("internal error: %s", exc)
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
