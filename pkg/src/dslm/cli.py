"""Command-line interface: ``dslm {preprocess,cluster,evaluate,generate,sweep}``."""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import graph as gc
from .baseline import sequential_local_moving
from .engine import DslmConfig, run_dslm_detailed
from .evaluation import (
    PlantedPartitionSpec,
    ari,
    expected_mixing,
    generate_planted_partition,
    mixing,
    p_out_for_mixing,
    remap_clustering,
    report,
)

MEASURES = {"mod": "modularity", "map": "map_equation"}

log = logging.getLogger("dslm")


def default_workers() -> int:
    return max(1, min(os.cpu_count() or 1, 16))


def _stderr(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_preprocess(args) -> int:
    g = gc.read_edge_list(args.input)
    h, mapping = gc.preprocess(g, args.seed)
    gc.write_edge_list(h, args.output)
    mapping_path = args.mapping or f"{args.output}.mapping"
    gc.write_mapping(mapping, mapping_path)
    _stderr(f"preprocessed: {g.n} -> {h.n} nodes ({len(mapping.dropped)} dropped), "
            f"mapping written to {mapping_path}")
    return 0


def cmd_cluster(args) -> int:
    g = gc.read_edge_list(args.input)
    cfg = DslmConfig(
        measure=MEASURES[args.measure],
        sub_rounds=args.sub_rounds,
        max_rounds=args.max_rounds,
        contract=not args.no_contraction,
        seed=args.seed,
        workers=args.workers,
    )
    start = time.perf_counter()
    levels = None
    if args.algorithm == "dslm":
        run = run_dslm_detailed(g, cfg)
        c, levels = run.clustering, run.levels
    else:
        c = sequential_local_moving(g, cfg)
    elapsed = time.perf_counter() - start
    gc.write_clustering(c, args.output)
    if levels is not None:
        log.info("levels executed: %d", len(levels))
        for info in levels:
            log.info("level %d: %d nodes -> %d clusters, moves per round %s",
                     info.level, info.nodes, info.clusters, info.moves_per_round)
        if args.figure:
            from .plotting import plot_round_moves
            plot_round_moves(levels, args.figure)
    sys.stderr.write(report(g, c).to_tsv())
    _stderr(f"seconds\t{elapsed:.3f}")
    return 0


def cmd_evaluate(args) -> int:
    g = gc.read_edge_list(args.graph)
    c = gc.read_clustering(args.clustering)
    if len(c) != g.n:
        _stderr(f"error: clustering has {len(c)} nodes, graph has {g.n}")
        return 1
    rep = report(g, c)
    lines = rep.to_tsv()
    if args.reference:
        ref = gc.read_clustering(args.reference)
        if args.mapping:
            ref = remap_clustering(ref, gc.read_mapping(args.mapping))
        if len(ref) != len(c):
            _stderr(f"error: reference has {len(ref)} nodes, clustering has {len(c)}")
            return 1
        lines += f"ari\t{ari(c, ref):.9f}\n"
    sys.stdout.write(lines)
    if args.report_out:
        Path(args.report_out).write_text(lines, encoding="ascii")
    if args.figure:
        from .plotting import plot_cluster_sizes
        plot_cluster_sizes(np.bincount(gc.normalize_clustering(c)), args.figure,
                           title=f"{rep.clusters} clusters")
    return 0


def cmd_generate(args) -> int:
    spec = PlantedPartitionSpec(args.nodes, args.clusters, args.p_in, args.p_out, args.seed)
    g, truth = generate_planted_partition(spec)
    gc.write_edge_list(g, args.graph_out)
    gc.write_clustering(truth, args.truth_out)
    _stderr(f"nodes\t{g.n}\nedges\t{g.num_arcs // 2}")
    _stderr(f"mixing\t{mixing(g, truth):.4f}\nexpected_mixing\t{expected_mixing(spec):.4f}")
    return 0


SWEEP_ALGORITHMS = {
    "DSLM-Map": ("dslm", "map_equation", True),
    "DSLM-Mod": ("dslm", "modularity", True),
    "DSLM-Mod w/o contraction": ("dslm", "modularity", False),
    "Louvain": ("sequential", "modularity", True),
}


def cmd_sweep(args) -> int:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for mu in args.mixing:
        p_out = p_out_for_mixing(args.nodes, args.clusters, args.p_in, mu)
        for seed in range(args.seeds):
            g, truth = generate_planted_partition(
                PlantedPartitionSpec(args.nodes, args.clusters, args.p_in, p_out, seed))
            h, mapping = gc.preprocess(g, seed)
            t = remap_clustering(truth, mapping)
            for name, (algo, measure, contract) in SWEEP_ALGORITHMS.items():
                cfg = DslmConfig(measure=measure, contract=contract, seed=seed,
                                 workers=args.workers)
                start = time.perf_counter()
                if algo == "dslm":
                    c = run_dslm_detailed(h, cfg).clustering
                else:
                    c = sequential_local_moving(h, cfg)
                secs = time.perf_counter() - start
                rep = report(h, c)
                rows.append({
                    "mu": mu, "seed": seed, "algorithm": name,
                    "measured_mixing": round(mixing(h, t), 6), "ari": round(ari(c, t), 6),
                    "modularity": round(rep.modularity, 6),
                    "map_equation": round(rep.map_equation, 6),
                    "clusters": rep.clusters, "seconds": round(secs, 3),
                })
                log.info("mu=%.2f seed=%d %s ari=%.4f", mu, seed, name, rows[-1]["ari"])
    with open(out / "sweep.tsv", "w", newline="", encoding="ascii") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), delimiter="\t")
        writer.writeheader()
        writer.writerows(rows)
    from .plotting import plot_ari_sweep
    plot_ari_sweep(rows, out / "sweep.png")
    _stderr(f"wrote {out / 'sweep.tsv'} and {out / 'sweep.png'}")
    return 0


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dslm", description=__doc__)
    parser.add_argument("--verbose", "-v", action="store_true",
                        help="log per-round move counts and per-level sizes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="drop isolated nodes, compact and shuffle IDs")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mapping", help="mapping file path (default: OUTPUT.mapping)")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("cluster", help="cluster a preprocessed edge list")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--measure", choices=sorted(MEASURES), default="mod")
    p.add_argument("--sub-rounds", type=int, default=4)
    p.add_argument("--max-rounds", type=int, default=8)
    p.add_argument("--no-contraction", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--algorithm", choices=["dslm", "sequential"], default="dslm")
    p.add_argument("--figure", help="write a moves-per-round plot (DSLM only)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("evaluate", help="score a clustering, optionally against a reference")
    p.add_argument("--graph", required=True)
    p.add_argument("--clustering", required=True)
    p.add_argument("--reference")
    p.add_argument("--mapping", help="mapping file translating reference IDs to graph IDs")
    p.add_argument("--report-out", help="also write the tab-separated report here")
    p.add_argument("--figure", help="write a cluster-size histogram")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate", help="sample a planted-partition benchmark graph")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--p-in", type=float, required=True)
    p.add_argument("--p-out", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--graph-out", required=True)
    p.add_argument("--truth-out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sweep", help="ARI against ground truth over a range of mixing values")
    p.add_argument("--nodes", type=int, default=2000)
    p.add_argument("--clusters", type=int, default=40)
    p.add_argument("--p-in", type=float, default=0.5)
    p.add_argument("--mixing", type=_floats, default=[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8])
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)
    log.propagate = False
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        _stderr(f"error: {exc}")
        return 1
    finally:
        log.removeHandler(handler)


if __name__ == "__main__":
    sys.exit(main())
