"""Sequential Brandes betweenness (binary-heap Dijkstra) and a brute-force pair-sum oracle."""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .graph import CsrGraph

NORMALIZATIONS = ("raw", "halved")
BRUTE_FORCE_MAX_N = 300


@dataclass
class BcResult:
    node_bc: np.ndarray
    edge_bc: np.ndarray | None = None
    depth_per_source: np.ndarray | None = None
    elapsed: float = 0.0
    sources: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    @property
    def avg_depth(self) -> float:
        if self.depth_per_source is None or len(self.depth_per_source) == 0:
            return float("nan")
        return float(np.mean(self.depth_per_source))


def check_normalization(normalization: str) -> None:
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")


def resolve_sources(g: CsrGraph, sources: Sequence[int] | None) -> np.ndarray:
    if sources is None:
        return np.arange(g.n, dtype=np.int64)
    src = np.asarray(sources, dtype=np.int64).reshape(-1)
    if len(src) and (src.min() < 0 or src.max() >= g.n):
        raise ValueError(f"source ids must lie in [0, {g.n})")
    return src


def _check_weights(g: CsrGraph) -> None:
    if g.m and not (g.weights > 0).all():
        raise ValueError("all edge weights must be positive")


def brandes_sequential(
    g: CsrGraph,
    compute_edge_bc: bool = False,
    normalization: str = "raw",
    sources: Sequence[int] | None = None,
    eq_rtol: float = 0.0,
) -> BcResult:
    """Brandes' algorithm with a lazy-deletion binary heap; the CPU baseline.

    Scores are summed over ordered (s, t) pairs unless ``normalization`` is
    ``"halved"``.  ``eq_rtol`` > 0 switches distance ties from exact equality
    to a relative comparison.
    """
    check_normalization(normalization)
    _check_weights(g)
    t0 = time.perf_counter()
    n = g.n
    src = resolve_sources(g, sources)
    offsets = g.offsets.tolist()
    adj = g.adjacency.tolist()
    wts = g.weights.tolist()
    eids = g.edge_id.tolist()
    bc = [0.0] * n
    ebc = [0.0] * g.m if compute_edge_bc else None
    inf = float("inf")

    if eq_rtol > 0:
        def tie(a, b):
            return abs(a - b) <= eq_rtol * b
    else:
        tie = None

    for s in src.tolist():
        dist = [inf] * n
        sigma = [0.0] * n
        done = [False] * n
        dist[s] = 0.0
        sigma[s] = 1.0
        order = []
        heap = [(0.0, s)]
        while heap:
            dv, v = heapq.heappop(heap)
            if done[v]:
                continue
            done[v] = True
            order.append(v)
            sv = sigma[v]
            for i in range(offsets[v], offsets[v + 1]):
                u = adj[i]
                if done[u]:
                    continue
                nd = dv + wts[i]
                du = dist[u]
                if tie is not None and du < inf and tie(nd, du):
                    sigma[u] += sv
                elif nd < du:
                    dist[u] = nd
                    sigma[u] = sv
                    heapq.heappush(heap, (nd, u))
                elif nd == du:
                    sigma[u] += sv

        delta = [0.0] * n
        for w in reversed(order):
            dw = dist[w]
            sw = sigma[w]
            acc = 0.0
            for i in range(offsets[w], offsets[w + 1]):
                v = adj[i]
                nd = dw + wts[i]
                if dist[v] == nd or (tie is not None and dist[v] < inf and tie(nd, dist[v])):
                    c = sw / sigma[v] * (1.0 + delta[v])
                    acc += c
                    if ebc is not None:
                        ebc[eids[i]] += c
            delta[w] = acc
            if w != s:
                bc[w] += acc

    scale = 0.5 if normalization == "halved" else 1.0
    node_bc = np.array(bc, dtype=np.float64) * scale
    edge_bc = np.array(ebc, dtype=np.float64) * scale if ebc is not None else None
    return BcResult(node_bc=node_bc, edge_bc=edge_bc, elapsed=time.perf_counter() - t0, sources=src)


def _path_counts(g: CsrGraph, dist: np.ndarray, rtol: float) -> np.ndarray:
    """Count shortest paths for every (s, t) from an all-pairs distance matrix."""
    n = g.n
    offsets = g.offsets.tolist()
    adj = g.adjacency.tolist()
    wts = g.weights.tolist()
    counts = np.zeros((n, n))
    for s in range(n):
        ds = dist[s]
        row = [0.0] * n
        row[s] = 1.0
        ds_list = ds.tolist()
        for t in np.argsort(ds, kind="stable").tolist():
            dt = ds_list[t]
            if t == s or dt == np.inf:
                continue
            total = 0.0
            for i in range(offsets[t], offsets[t + 1]):
                v = adj[i]
                if abs(ds_list[v] + wts[i] - dt) <= rtol * dt:
                    total += row[v]
            row[t] = total
        counts[s] = row
    return counts


def _on_shortest(via: np.ndarray, dst: np.ndarray, rtol: float) -> np.ndarray:
    return np.isfinite(via) & np.isfinite(dst)[None, :] & (np.abs(via - dst[None, :]) <= rtol * dst[None, :])


def _add_pair_dependencies(g, s, dist, sigma, rtol, node_bc, edge_bc) -> None:
    n = g.n
    dst = dist[s]
    ids = np.arange(n)
    # through[v, t]: v lies on a shortest s-t path
    through = _on_shortest(dst[:, None] + dist, dst, rtol)
    through[s, :] = False
    through[:, s] = False
    through[ids, ids] = False
    node_bc += np.where(through, sigma[s][:, None] * sigma / sigma[s][None, :], 0.0).sum(axis=1)
    if edge_bc is None:
        return
    for a, b in ((g.edge_u, g.edge_v), (g.edge_v, g.edge_u)):
        # edge traversed a -> b on a shortest s-t path
        on = _on_shortest(dst[a][:, None] + g.edge_w[:, None] + dist[b], dst, rtol)
        on[:, s] = False
        edge_bc += np.where(on, sigma[s][a][:, None] * sigma[b] / sigma[s][None, :], 0.0).sum(axis=1)


def brute_force_bc(
    g: CsrGraph,
    compute_edge_bc: bool = False,
    normalization: str = "raw",
    max_n: int = BRUTE_FORCE_MAX_N,
    rtol: float = 1e-12,
) -> BcResult:
    """Sum pair-dependencies sigma_st(v) / sigma_st directly over all ordered pairs.

    Distances come from scipy's Dijkstra, path counts from a separate DP, so
    nothing is shared with :func:`brandes_sequential`.  Test oracle only.
    """
    check_normalization(normalization)
    _check_weights(g)
    if g.n > max_n:
        raise ValueError(f"brute force refused: n={g.n} exceeds {max_n}")
    t0 = time.perf_counter()
    n = g.n
    if n == 0:
        return BcResult(np.zeros(0), np.zeros(0) if compute_edge_bc else None)
    rows = np.repeat(np.arange(n), np.diff(g.offsets))
    mat = csr_matrix((g.weights, (rows, g.adjacency)), shape=(n, n))
    dist = dijkstra(mat, directed=True)
    sigma = _path_counts(g, dist, rtol)

    node_bc = np.zeros(n)
    edge_bc = np.zeros(g.m) if compute_edge_bc else None
    with np.errstate(divide="ignore", invalid="ignore"):
        for s in range(n):
            _add_pair_dependencies(g, s, dist, sigma, rtol, node_bc, edge_bc)

    if normalization == "halved":
        node_bc *= 0.5
        if edge_bc is not None:
            edge_bc *= 0.5
    return BcResult(node_bc=node_bc, edge_bc=edge_bc, elapsed=time.perf_counter() - t0,
                    sources=np.arange(n))
