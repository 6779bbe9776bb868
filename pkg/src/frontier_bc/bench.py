"""Timed strategy comparison against the sequential baseline."""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .engine import Strategy, bc_parallel
from .graph import CsrGraph, graph_stats
from .oracle import brandes_sequential

SEQUENTIAL = "sequential"
SCORE_RTOL = 1e-6


class BenchValidationError(RuntimeError):
    def __init__(self, message: str, records: list):
        super().__init__(message)
        self.records = records


@dataclass
class BenchRecord:
    graph_name: str
    n: int
    m: int
    avg_degree: float
    max_degree: int
    strategy_name: str
    lane_width: int
    workers: int
    wall_time: float
    speedup_vs_baseline: float
    avg_depth: float
    reps: int
    times: list[float] = field(default_factory=list)
    valid: bool = field(default=True, metadata={"csv": False})


CSV_COLUMNS = [f.name for f in fields(BenchRecord) if f.metadata.get("csv", True)]


def scores_match(a: np.ndarray, b: np.ndarray, rtol: float = SCORE_RTOL) -> bool:
    """Elementwise |a - b| <= rtol * max(|a|, |b|, 1)."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        return False
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return bool(np.all(np.abs(a - b) <= rtol * scale))


def max_rel_error(a: np.ndarray, b: np.ndarray) -> float:
    if len(a) == 0:
        return 0.0
    scale = np.maximum(np.maximum(np.abs(a), np.abs(b)), 1.0)
    return float(np.max(np.abs(a - b) / scale))


def _timed(fn, reps: int):
    times, result = [], None
    for _ in range(reps):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, times


def run_bench(g: CsrGraph, strategies: Sequence, workers: int = 1, reps: int = 3,
              sources: Sequence[int] | None = None, name: str = "graph",
              compute_edge_bc: bool = False, rtol: float = SCORE_RTOL) -> list[BenchRecord]:
    """Baseline record first, then one record per strategy.

    Every strategy is checked against the baseline scores before it is
    reported; a mismatch raises :class:`BenchValidationError`.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    stats = graph_stats(g)
    desc = dict(graph_name=name, n=stats["n"], m=stats["m"], avg_degree=stats["avg_degree"],
                max_degree=stats["max_degree"])

    def sequential():
        return brandes_sequential(g, compute_edge_bc=compute_edge_bc, sources=sources)

    baseline, (base_time,) = _timed(sequential, 1)
    records = [BenchRecord(**desc, strategy_name=SEQUENTIAL, lane_width=1, workers=1,
                           wall_time=base_time, speedup_vs_baseline=1.0, avg_depth=math.nan,
                           reps=1, times=[base_time])]
    failures = []
    for spec in strategies:
        if isinstance(spec, str) and spec == SEQUENTIAL:
            result, times = _timed(sequential, reps)
            strategy_name, lane_width, used_workers, depth = SEQUENTIAL, 1, 1, math.nan
        else:
            strategy = spec if isinstance(spec, Strategy) else Strategy.parse(spec)
            result, times = _timed(lambda: bc_parallel(g, strategy, sources=sources, workers=workers,
                                                       compute_edge_bc=compute_edge_bc), reps)
            strategy_name, lane_width, used_workers = strategy.name, strategy.lane_width, workers
            depth = result.avg_depth
        wall = statistics.median(times)
        ok = scores_match(result.node_bc, baseline.node_bc, rtol)
        if compute_edge_bc:
            ok = ok and scores_match(result.edge_bc, baseline.edge_bc, rtol)
        rec = BenchRecord(**desc, strategy_name=strategy_name, lane_width=lane_width,
                          workers=used_workers, wall_time=wall,
                          speedup_vs_baseline=base_time / wall if wall > 0 else math.inf,
                          avg_depth=depth, reps=reps, times=times, valid=ok)
        records.append(rec)
        if not ok:
            failures.append(f"{strategy_name}: max relative error "
                            f"{max_rel_error(result.node_bc, baseline.node_bc):.3g}")

    if failures:
        raise BenchValidationError("scores differ from the sequential baseline: " + "; ".join(failures),
                                   records)
    depths = {r.avg_depth for r in records if not math.isnan(r.avg_depth)}
    if len(depths) > 1:
        raise BenchValidationError(f"avg_depth differs between strategies: {sorted(depths)}", records)
    return records


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    if isinstance(value, list):
        return ";".join(_fmt(float(v)) for v in value)
    return str(value)


def write_csv(records: Sequence[BenchRecord]) -> str:
    if not records:
        raise ValueError("no records to write")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for rec in records:
        writer.writerow([_fmt(getattr(rec, col)) for col in CSV_COLUMNS])
    return out.getvalue()


def read_csv(text: str) -> list[BenchRecord]:
    types = {f.name: f.type for f in fields(BenchRecord)}
    records = []
    for row in csv.DictReader(io.StringIO(text)):
        values = {}
        for col in CSV_COLUMNS:
            raw, kind = row[col], types[col]
            if kind == "int":
                values[col] = int(raw)
            elif kind == "float":
                values[col] = float(raw)
            elif col == "times":
                values[col] = [float(x) for x in raw.split(";") if x]
            else:
                values[col] = raw
        records.append(BenchRecord(**values))
    return records
