"""Command-line entry point: compute, generate, bench, stats."""

from __future__ import annotations

import argparse
import secrets
import sys
import time
from contextlib import contextmanager

import numpy as np

from . import bench, generators
from .engine import Strategy, bc_parallel, default_workers
from .graph import CsrGraph, EdgeListError, ValidationError, build_csr, format_number, graph_stats, parse_edge_list

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class CliError(Exception):
    def __init__(self, message: str, status: int = EXIT_USAGE):
        super().__init__(message)
        self.status = status


def _diag(msg: str) -> None:
    print(msg, file=sys.stderr)


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = secrets.randbits(63)
        _diag(f"seed={seed}")
    return seed


def load_graph(path: str, unit_weights: bool = False) -> CsrGraph:
    try:
        with open(path, encoding="utf-8") as fh:
            edges = parse_edge_list(fh)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from None
    except (EdgeListError, ValidationError) as exc:
        raise CliError(f"{path}: {exc}") from None
    if unit_weights:
        edges = edges.with_weights(1.0)
    return build_csr(edges)


@contextmanager
def _output(path: str | None):
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_FAILED) from None
    with fh:
        yield fh


def _strategy(args) -> Strategy:
    try:
        return Strategy.parse(args.strategy, args.lane_width)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def _sample_sources(g: CsrGraph, k: int | None, seed: int | None):
    if k is None or k >= g.n:
        return None
    if k < 1:
        raise CliError("--sources-sample must be >= 1")
    rng = np.random.default_rng(_resolve_seed(seed))
    return np.sort(rng.choice(g.n, size=k, replace=False))


def cmd_compute(args) -> int:
    g = load_graph(args.input, args.unit_weights)
    strategy = _strategy(args)
    sources = _sample_sources(g, args.sources_sample, args.seed)
    normalization = "halved" if args.normalize == "half" else "raw"
    result = bc_parallel(g, strategy, sources=sources, workers=args.workers,
                         compute_edge_bc=args.edge_bc, normalization=normalization, strict=args.strict)
    order = np.argsort(g.node_ids, kind="stable")
    lines = [f"{g.node_ids[i]}\t{format_number(result.node_bc[i])}" for i in order]
    edge_lines = []
    if args.edge_bc:
        ou, ov = g.node_ids[g.edge_u], g.node_ids[g.edge_v]
        lo, hi = np.minimum(ou, ov), np.maximum(ou, ov)
        for e in np.lexsort((hi, lo)):
            edge_lines.append(f"{lo[e]}\t{hi[e]}\t{format_number(result.edge_bc[e])}")
    if args.edge_bc and args.edge_output:
        with _output(args.output) as fh:
            fh.write("\n".join(lines) + "\n" if lines else "")
        with _output(args.edge_output) as fh:
            fh.write("\n".join(edge_lines) + "\n" if edge_lines else "")
    else:
        with _output(args.output) as fh:
            body = lines + edge_lines
            fh.write("\n".join(body) + "\n" if body else "")
    _diag(f"n={g.n} m={g.m} strategy={strategy.name} lane_width={strategy.lane_width} "
          f"workers={args.workers} wall_time={result.elapsed:.6f}s")
    return EXIT_OK


def cmd_generate(args) -> int:
    seed = _resolve_seed(args.seed)
    size = args.scale if args.model == "kronecker" else args.nodes
    if size is None:
        raise CliError("--scale is required for kronecker" if args.model == "kronecker"
                       else "--nodes is required for er")
    try:
        spec = generators.GenSpec(args.model, size, args.avg_degree, seed,
                                  (args.weight_lo, args.weight_hi))
        edges = generators.generate(spec)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    header = f"frontier-bc generate {spec.describe()}\nn={spec.n} m={len(edges)}"
    with _output(args.output) as fh:
        fh.write(generators.format_edge_list(edges, header))
    return EXIT_OK


def cmd_bench(args) -> int:
    g = load_graph(args.input, args.unit_weights)
    names = [s for s in args.strategies.split(",") if s.strip()]
    strategies = []
    for name in names:
        if name.strip() == bench.SEQUENTIAL:
            strategies.append(bench.SEQUENTIAL)
            continue
        try:
            strategies.append(Strategy.parse(name, args.lane_width))
        except ValueError as exc:
            raise CliError(str(exc)) from None
    sources = _sample_sources(g, args.sources_sample, args.seed)
    try:
        records = bench.run_bench(g, strategies, workers=args.workers, reps=args.reps,
                                  sources=sources, name=args.name or args.input,
                                  compute_edge_bc=args.edge_bc)
    except bench.BenchValidationError as exc:
        _diag(f"bench failed: {exc}")
        return EXIT_FAILED
    with _output(args.output) as fh:
        fh.write(bench.write_csv(records))
    for rec in records[1:]:
        _diag(f"{rec.strategy_name}: {rec.wall_time:.4f}s speedup={rec.speedup_vs_baseline:.3g} "
              f"avg_depth={rec.avg_depth:.4g}")
    return EXIT_OK


def cmd_stats(args) -> int:
    g = load_graph(args.input, args.unit_weights)
    st = graph_stats(g)
    line = f"n={st['n']} m={st['m']} max_degree={st['max_degree']} avg_degree={st['avg_degree']!r}"
    if args.depth:
        sources = _sample_sources(g, args.sources_sample, args.seed)
        result = bc_parallel(g, Strategy.parse("we"), sources=sources, workers=args.workers)
        line += f" avg_depth={result.avg_depth!r}"
    with _output(args.output) as fh:
        fh.write(line + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frontier-bc",
                                     description="Weighted betweenness centrality with frontier-parallel strategies.")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_input(p):
        p.add_argument("input", help="edge-list file: 'u v [w]' per line, '#' comments")
        p.add_argument("--unit-weights", action="store_true", help="override every weight with 1")
        p.add_argument("-o", "--output", help="output file (default: stdout)")

    def engine_opts(p, with_strategy=True):
        if with_strategy:
            p.add_argument("--strategy", default="we-warp32",
                           help="np, we, warp[W] or we-warp[W] (default: we-warp32)")
        p.add_argument("--lane-width", type=int, default=None, help="lane width W for warp strategies")
        p.add_argument("--workers", type=int, default=default_workers(),
                       help="worker processes (default: logical cores)")
        p.add_argument("--seed", type=int, default=None, help="seed for source sampling")
        p.add_argument("--sources-sample", type=int, default=None, metavar="K",
                       help="use K randomly chosen sources instead of all")

    p = sub.add_parser("compute", help="betweenness of every node (and edge)")
    graph_input(p)
    engine_opts(p)
    p.add_argument("--edge-bc", action="store_true", help="also write 'u v bc' per edge")
    p.add_argument("--edge-output", help="write edge rows here instead of after the node rows")
    p.add_argument("--normalize", choices=("raw", "half"), default="raw")
    p.add_argument("--strict", action="store_true", help="fixed-order reduction, bitwise reproducible")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("generate", help="write a synthetic weighted edge list")
    p.add_argument("--model", choices=("er", "kronecker"), required=True)
    p.add_argument("--nodes", type=int, help="vertex count (er)")
    p.add_argument("--scale", type=int, help="log2 of the vertex count (kronecker)")
    p.add_argument("--avg-degree", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--weight-lo", type=int, default=generators.DEFAULT_WEIGHT_RANGE[0])
    p.add_argument("--weight-hi", type=int, default=generators.DEFAULT_WEIGHT_RANGE[1])
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="time strategies against the sequential baseline, CSV out")
    graph_input(p)
    engine_opts(p, with_strategy=False)
    p.add_argument("--strategies", default="np,we,warp32,we-warp32")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--edge-bc", action="store_true", help="also gate on edge scores")
    p.add_argument("--name", help="graph name for the CSV (default: input path)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("stats", help="vertex/edge counts and degrees")
    graph_input(p)
    engine_opts(p, with_strategy=False)
    p.add_argument("--depth", action="store_true", help="also report avg_depth over the sources")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        _diag("error: --workers must be >= 1")
        return EXIT_USAGE
    if getattr(args, "reps", 1) < 1:
        _diag("error: --reps must be >= 1")
        return EXIT_USAGE
    t0 = time.perf_counter()
    try:
        status = args.func(args)
    except CliError as exc:
        _diag(f"error: {exc}")
        return exc.status
    _diag(f"done in {time.perf_counter() - t0:.3f}s")
    return status


if __name__ == "__main__":
    sys.exit(main())
