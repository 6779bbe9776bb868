"""Frontier-parallel weighted betweenness centrality.

Each source runs a level-synchronous Dijkstra: relax the frontier, reduce the
settlement threshold ``Delta = min(d[u] + min_incident_weight[u])`` over the
unsettled reachable vertices, then settle every vertex with ``d < Delta``
(strictly, so path counts are final when a vertex is settled).  Settled
levels are recorded in ``S``/``ends`` and walked backwards to accumulate
dependencies.

Fine-grained parallelism is data-parallel over work items (one per vertex,
or one per (vertex, lane) with a lane width > 1) and is executed as numpy
bulk operations.  A batch of sources shares one set of ``(B, n)`` arrays,
one row per source.  Coarse-grained parallelism spreads source batches over
worker processes.
"""

from __future__ import annotations

import atexit
import enum
import os
import threading
import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .graph import CsrGraph
from .oracle import BcResult, check_normalization, resolve_sources

LANE_WIDTHS = (1, 4, 8, 16, 32)
# strict-mode block size; fixed so the reduction order never depends on workers
STRICT_BLOCK = 32
_BATCH_CELLS = 1 << 21


class FrontierMode(str, enum.Enum):
    SCAN_ALL = "scan_all"
    QUEUE = "queue"


class SettleRule(str, enum.Enum):
    STRICT = "strict"
    # d <= Delta; wrong path counts, kept only as a negative control
    INCLUSIVE = "inclusive"


@dataclass(frozen=True)
class Strategy:
    frontier_mode: FrontierMode = FrontierMode.SCAN_ALL
    lane_width: int = 1

    def __post_init__(self):
        object.__setattr__(self, "frontier_mode", FrontierMode(self.frontier_mode))
        if self.lane_width not in LANE_WIDTHS:
            raise ValueError(f"lane width must be one of {LANE_WIDTHS}, got {self.lane_width!r}")

    @property
    def name(self) -> str:
        base = "we" if self.frontier_mode is FrontierMode.QUEUE else "np"
        if self.lane_width == 1:
            return base
        return f"warp{self.lane_width}" if base == "np" else f"we-warp{self.lane_width}"

    @classmethod
    def parse(cls, text: str, lane_width: int | None = None) -> Strategy:
        """Parse ``np``, ``we``, ``warp[W]`` or ``we-warp[W]``.

        ``lane_width`` fills in a missing W, or overrides it for the warp forms.
        """
        name = text.strip().lower()
        if name in ("np", "node-parallel"):
            mode, width, warp = FrontierMode.SCAN_ALL, 1, False
        elif name in ("we", "work-efficient"):
            mode, width, warp = FrontierMode.QUEUE, 1, False
        elif name.startswith("we-warp"):
            mode, width, warp = FrontierMode.QUEUE, name[len("we-warp"):], True
        elif name.startswith("warp"):
            mode, width, warp = FrontierMode.SCAN_ALL, name[len("warp"):], True
        else:
            raise ValueError(f"unknown strategy {text!r}")
        if warp:
            if lane_width is not None:
                width = lane_width
            elif width == "":
                width = 32
            try:
                width = int(width)
            except ValueError:
                raise ValueError(f"unknown strategy {text!r}") from None
        elif lane_width not in (None, 1):
            width = lane_width
        return cls(mode, width)


ALL_STRATEGIES = tuple(Strategy(mode, w) for mode in FrontierMode for w in LANE_WIDTHS)


@dataclass
class TraversalState:
    """Working set for a batch of sources; row ``b`` belongs to ``sources[b]``.

    ``F`` is a ``(B, n)`` flag array in scan-all mode; in queue mode it is the
    concatenation of every row's compact queue, row ``b`` holding ``F_len[b]``
    entries.  ``level[b, v]`` is the index of the level that settled ``v``
    (-1 while unsettled).
    """

    sources: np.ndarray
    d: np.ndarray
    sigma: np.ndarray
    delta: np.ndarray
    U: np.ndarray
    F: np.ndarray
    F_len: np.ndarray
    S: np.ndarray
    S_len: np.ndarray
    ends: np.ndarray
    ends_len: np.ndarray
    Delta: np.ndarray
    level: np.ndarray
    mode: FrontierMode
    rounds: int = 0
    counters: dict = field(default_factory=lambda: {"work_items": 0, "active_lanes": 0, "edges_relaxed": 0})

    @property
    def batch(self) -> int:
        return len(self.sources)

    @property
    def depth(self) -> np.ndarray:
        return self.ends_len - 1

    def frontier(self) -> tuple[np.ndarray, np.ndarray]:
        """(row, vertex) pairs of the current frontier."""
        if self.mode is FrontierMode.QUEUE:
            return np.repeat(np.arange(self.batch), self.F_len), self.F
        return np.nonzero(self.F)

    def level_members(self, row: int, k: int) -> np.ndarray:
        return self.S[row, self.ends[row, k]:self.ends[row, k + 1]]


def init_state(g: CsrGraph, s, strategy: Strategy = Strategy(),
               reuse: TraversalState | None = None) -> TraversalState:
    """Fresh state with ``s`` (an id or a sequence of ids) as settled frontier."""
    sources = np.atleast_1d(np.asarray(s, dtype=np.int64))
    n = g.n
    if len(sources) and (sources.min() < 0 or sources.max() >= n):
        raise ValueError(f"source out of range [0, {n})")
    B = len(sources)
    rows = np.arange(B)
    if reuse is not None and reuse.d.shape == (B, n) and reuse.mode is strategy.frontier_mode:
        st = reuse
        st.sources = sources
        st.d.fill(np.inf)
        st.sigma.fill(0.0)
        st.delta.fill(0.0)
        st.U.fill(True)
        st.S.fill(0)
        st.ends.fill(0)
        st.level.fill(-1)
        st.rounds = 0
        st.counters = {k: 0 for k in st.counters}
    else:
        st = TraversalState(
            sources=sources,
            d=np.full((B, n), np.inf),
            sigma=np.zeros((B, n)),
            delta=np.zeros((B, n)),
            U=np.ones((B, n), dtype=bool),
            F=np.zeros(0, dtype=np.int64),
            F_len=np.zeros(B, dtype=np.int64),
            S=np.zeros((B, n), dtype=np.int64),
            S_len=np.zeros(B, dtype=np.int64),
            ends=np.zeros((B, n + 1), dtype=np.int64),
            ends_len=np.zeros(B, dtype=np.int64),
            Delta=np.zeros(B),
            level=np.full((B, n), -1, dtype=np.int64),
            mode=strategy.frontier_mode,
        )
    st.d[rows, sources] = 0.0
    st.sigma[rows, sources] = 1.0
    st.U[rows, sources] = False
    st.level[rows, sources] = 0
    if strategy.frontier_mode is FrontierMode.QUEUE:
        st.F = sources.copy()
    else:
        st.F = np.zeros((B, n), dtype=bool)
        st.F[rows, sources] = True
    st.F_len = np.ones(B, dtype=np.int64)
    st.S[rows, 0] = sources
    st.S_len = np.ones(B, dtype=np.int64)
    st.ends[:, 1] = 1
    st.ends_len = np.full(B, 2, dtype=np.int64)
    st.Delta = np.zeros(B)
    return st


def lane_slots(g: CsrGraph, verts: np.ndarray, lane_width: int):
    """Adjacency slots of ``verts`` in lane order.

    Lane ``j`` of a vertex takes its row positions ``j, j+W, j+2W, ...``.
    Returns ``(item, lane, slot)`` per processed slot, grouped by item then
    lane, plus the number of lanes that found any work.
    """
    starts = g.offsets[verts]
    deg = g.offsets[verts + 1] - starts
    total = int(deg.sum())
    item = np.repeat(np.arange(len(verts)), deg)
    first = np.cumsum(deg) - deg
    pos = np.arange(total) - first[item]
    active = int(np.minimum(deg, lane_width).sum())
    if lane_width == 1:
        return item, np.zeros(total, dtype=np.int64), starts[item] + pos, active
    lane = pos % lane_width
    order = np.lexsort((pos // lane_width, lane, item))
    item, lane, pos = item[order], lane[order], pos[order]
    return item, lane, starts[item] + pos, active


def _ties(a: np.ndarray, b: np.ndarray, eq_rtol: float) -> np.ndarray:
    if eq_rtol > 0:
        return np.abs(a - b) <= eq_rtol * b
    return a == b


def _frontier_work(g: CsrGraph, state: TraversalState, strategy: Strategy):
    rows, verts = state.frontier()
    # scan-all issues one item per vertex; queue mode only per queue entry
    scanned = state.batch * g.n if strategy.frontier_mode is FrontierMode.SCAN_ALL else len(verts)
    state.counters["work_items"] += scanned * strategy.lane_width
    return rows, verts


def relax_frontier(g: CsrGraph, state: TraversalState, strategy: Strategy,
                   eq_rtol: float = 0.0, rng: np.random.Generator | None = None) -> TraversalState:
    """Relax every edge from a frontier vertex into an unsettled neighbour.

    Updates into one target behave as exclusive read-modify-write units, so the
    round equals a sequential interleaving of per-edge relaxations: the target
    keeps the minimum candidate distance and the sum of sigma over candidates
    achieving it (plus its old sigma if its old distance survives).  ``rng``
    permutes the work items; the result is schedule independent.
    """
    rows, verts = _frontier_work(g, state, strategy)
    if len(verts) == 0:
        return state
    item, _, slot, active = lane_slots(g, verts, strategy.lane_width)
    state.counters["active_lanes"] += active
    if rng is not None:
        perm = rng.permutation(len(slot))
        item, slot = item[perm], slot[perm]
    r = rows[item]
    t = g.adjacency[slot]
    keep = state.U[r, t]
    r, t, src = r[keep], t[keep], verts[item[keep]]
    state.counters["edges_relaxed"] += len(t)
    if len(t) == 0:
        return state
    n = g.n
    cand = state.d[r, src] + g.weights[slot[keep]]
    contrib = state.sigma[r, src]
    flat = r * n + t
    d_flat = state.d.reshape(-1)
    sig_flat = state.sigma.reshape(-1)
    old = d_flat[flat]
    np.minimum.at(d_flat, flat, cand)
    new = d_flat[flat]
    if eq_rtol > 0:
        # a candidate within tolerance of the old distance is a tie, not an improvement
        tie_old = np.isfinite(old) & _ties(new, old, eq_rtol)
        d_flat[flat[tie_old]] = old[tie_old]
        new = d_flat[flat]
    improved = new < old
    sig_flat[flat[improved]] = 0.0
    hit = _ties(cand, new, eq_rtol)
    np.add.at(sig_flat, flat[hit], contrib[hit])
    return state


def relax_frontier_threaded(g: CsrGraph, state: TraversalState, strategy: Strategy,
                            workers: int, rng: np.random.Generator | None = None,
                            n_locks: int = 1024) -> TraversalState:
    """Thread-parallel relax with one lock stripe per target vertex.

    Work items ((row, vertex, lane) triples) are optionally shuffled, dealt to
    ``workers`` threads and executed edge by edge; each update of a target is
    a compare / maybe-reset / maybe-add critical section.
    """
    rows, verts = _frontier_work(g, state, strategy)
    if len(verts) == 0:
        return state
    item, lane, slot, active = lane_slots(g, verts, strategy.lane_width)
    state.counters["active_lanes"] += active
    # one work item per (frontier entry, lane)
    key = item * strategy.lane_width + lane
    bounds = np.flatnonzero(np.diff(key)) + 1
    groups = np.split(np.arange(len(slot)), bounds) if len(slot) else []
    work = [(int(rows[item[g_[0]]]), int(verts[item[g_[0]]]), slot[g_].tolist()) for g_ in groups]
    if rng is not None:
        work = [work[i] for i in rng.permutation(len(work))]
    locks = [threading.Lock() for _ in range(n_locks)]
    d, sigma, U = state.d, state.sigma, state.U
    adj, wts = g.adjacency, g.weights
    n = g.n
    relaxed = [0] * workers

    def run(wid: int):
        count = 0
        for row, v, slots in work[wid::workers]:
            dv = d[row, v]
            sv = sigma[row, v]
            for i in slots:
                t = int(adj[i])
                if not U[row, t]:
                    continue
                count += 1
                cand = dv + wts[i]
                with locks[(row * n + t) % n_locks]:
                    cur = d[row, t]
                    if cand < cur:
                        d[row, t] = cand
                        sigma[row, t] = 0.0
                        cur = cand
                    if cand == cur:
                        sigma[row, t] += sv
        relaxed[wid] = count

    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(run, range(workers)))
    state.counters["edges_relaxed"] += sum(relaxed)
    return state


def compute_threshold(g: CsrGraph, state: TraversalState, strategy: Strategy | None = None) -> np.ndarray:
    """Per-row min of ``d[u] + min_incident_weight[u]`` over unsettled reachable ``u``."""
    live = state.U & np.isfinite(state.d)
    cand = np.where(live, state.d + g.min_incident_weight[None, :], np.inf)
    state.Delta = cand.min(axis=1) if g.n else np.full(state.batch, np.inf)
    return state.Delta


def settle_and_advance(g: CsrGraph, state: TraversalState, strategy: Strategy,
                       rule: SettleRule = SettleRule.STRICT, eq_rtol: float = 0.0) -> np.ndarray:
    """Settle unsettled vertices below the threshold, make them the frontier.

    With ``eq_rtol`` a distance within tolerance of the threshold counts as
    equal to it and stays unsettled.  Returns the number settled per row.
    """
    Delta = state.Delta[:, None]
    if SettleRule(rule) is SettleRule.STRICT:
        newly = state.U & (state.d < Delta)
        if eq_rtol > 0:
            newly &= ~_ties(state.d, Delta, eq_rtol)
            # keep progress if the tolerance swallowed the whole band
            stuck = np.flatnonzero(~newly.any(axis=1) & np.isfinite(state.Delta))
            if len(stuck):
                dd = np.where(state.U[stuck], state.d[stuck], np.inf)
                low = dd.min(axis=1, keepdims=True)
                newly[stuck] = np.isfinite(dd) & ((dd == low) | _ties(dd, low, eq_rtol))
    else:
        newly = state.U & (state.d <= Delta) & np.isfinite(state.d)
    rows, verts = np.nonzero(newly)
    cnt = np.bincount(rows, minlength=state.batch)
    state.U[rows, verts] = False
    first = np.cumsum(cnt) - cnt
    rank = np.arange(len(rows)) - first[rows]
    state.S[rows, state.S_len[rows] + rank] = verts
    state.S_len += cnt
    grew = np.flatnonzero(cnt)
    state.level[rows, verts] = state.ends_len[rows] - 1
    state.ends[grew, state.ends_len[grew]] = state.ends[grew, state.ends_len[grew] - 1] + cnt[grew]
    state.ends_len[grew] += 1
    if state.mode is FrontierMode.QUEUE:
        state.F = verts
    else:
        state.F = newly
    state.F_len = cnt
    state.rounds += 1
    return cnt


def shortest_paths(g: CsrGraph, state: TraversalState, strategy: Strategy, eq_rtol: float = 0.0,
                   rule: SettleRule = SettleRule.STRICT, fine_workers: int = 1,
                   rng: np.random.Generator | None = None) -> TraversalState:
    """Run relax / threshold / settle rounds until every row's threshold is infinite."""
    while (state.Delta < np.inf).any():
        if fine_workers > 1:
            relax_frontier_threaded(g, state, strategy, fine_workers, rng=rng)
        else:
            relax_frontier(g, state, strategy, eq_rtol=eq_rtol, rng=rng)
        compute_threshold(g, state, strategy)
        settle_and_advance(g, state, strategy, rule=rule, eq_rtol=eq_rtol)
    return state


def accumulate_dependencies(g: CsrGraph, state: TraversalState, strategy: Strategy,
                            bc_accumulator: np.ndarray | None = None,
                            edge_bc_accumulator: np.ndarray | None = None,
                            eq_rtol: float = 0.0, check_levels: bool = False,
                            ordered: bool = False) -> TraversalState:
    """Walk the settled levels from the deepest one back to the source.

    All vertices of a level are processed together; a vertex sums
    ``sigma[w] / sigma[v] * (1 + delta[v])`` over successors ``v`` with
    ``d[v] = d[w] + w(w, v)``, one partial sum per lane, then combines its
    lanes.  ``ordered`` adds the per-source rows into ``bc_accumulator`` one
    after another in row order.
    """
    W = strategy.lane_width
    n = g.n
    B = state.batch
    max_level = int(state.ends_len.max()) - 2 if B else -1
    for k in range(max_level, -1, -1):
        live = np.flatnonzero(state.ends_len - 2 >= k)
        lo = state.ends[live, k]
        cnt = state.ends[live, k + 1] - lo
        rows = np.repeat(live, cnt)
        first = np.cumsum(cnt) - cnt
        pos = np.repeat(lo - first, cnt) + np.arange(int(cnt.sum()))
        ws = state.S[rows, pos]
        item, lane, slot, _ = lane_slots(g, ws, W)
        r = rows[item]
        w = ws[item]
        v = g.adjacency[slot]
        dag = _ties(state.d[r, w] + g.weights[slot], state.d[r, v], eq_rtol)
        r, w, v, item, lane, slot = r[dag], w[dag], v[dag], item[dag], lane[dag], slot[dag]
        if check_levels and len(v):
            bad = state.level[r, v] <= state.level[r, w]
            if bad.any():
                raise AssertionError("a successor was settled no deeper than its predecessor")
        c = state.sigma[r, w] / state.sigma[r, v] * (1.0 + state.delta[r, v])
        partial = np.bincount(item * W + lane, weights=c, minlength=len(ws) * W)
        state.delta[rows, ws] = partial.reshape(len(ws), W).sum(axis=1)
        if edge_bc_accumulator is not None and len(c):
            edge_bc_accumulator += np.bincount(g.edge_id[slot], weights=c, minlength=g.m)
    if bc_accumulator is not None and B:
        contrib = state.delta.copy()
        contrib[np.arange(B), state.sources] = 0.0
        if ordered:
            for row in contrib:
                bc_accumulator += row
        else:
            bc_accumulator += contrib.sum(axis=0)
    return state


def batch_size_for(n: int) -> int:
    return int(max(1, min(64, _BATCH_CELLS // max(n, 1))))


def run_sources(g: CsrGraph, sources: np.ndarray, strategy: Strategy, compute_edge_bc: bool = False,
                eq_rtol: float = 0.0, batch: int | None = None, ordered: bool = False,
                fine_workers: int = 1, schedule_seed: int | None = None, check_levels: bool = False,
                rule: SettleRule = SettleRule.STRICT):
    """Full pipeline for ``sources`` on one worker; returns private accumulators."""
    batch = batch or batch_size_for(g.n)
    bc = np.zeros(g.n)
    ebc = np.zeros(g.m) if compute_edge_bc else None
    depths = np.zeros(len(sources), dtype=np.int64)
    counters = {"work_items": 0, "active_lanes": 0, "edges_relaxed": 0, "rounds": 0}
    rng = np.random.default_rng(schedule_seed) if schedule_seed is not None else None
    state = None
    for lo in range(0, len(sources), batch):
        chunk = sources[lo:lo + batch]
        state = init_state(g, chunk, strategy, reuse=state)
        shortest_paths(g, state, strategy, eq_rtol=eq_rtol, rule=rule,
                       fine_workers=fine_workers, rng=rng)
        accumulate_dependencies(g, state, strategy, bc, ebc, eq_rtol=eq_rtol,
                                check_levels=check_levels, ordered=ordered)
        depths[lo:lo + len(chunk)] = state.depth
        for key, val in state.counters.items():
            counters[key] += val
        counters["rounds"] += state.rounds
    return bc, ebc, depths, counters


_POOLS: dict[int, ProcessPoolExecutor] = {}


def _pool(workers: int) -> ProcessPoolExecutor:
    pool = _POOLS.get(workers)
    if pool is None:
        pool = _POOLS[workers] = ProcessPoolExecutor(max_workers=workers)
    return pool


@atexit.register
def shutdown_pools() -> None:
    for pool in _POOLS.values():
        pool.shutdown(cancel_futures=True)
    _POOLS.clear()


def default_workers() -> int:
    return os.cpu_count() or 1


def bc_parallel(
    g: CsrGraph,
    strategy: Strategy = Strategy(),
    sources: Sequence[int] | None = None,
    workers: int = 1,
    compute_edge_bc: bool = False,
    normalization: str = "raw",
    strict: bool = False,
    eq_rtol: float = 0.0,
    fine_workers: int = 1,
    schedule_seed: int | None = None,
    check_levels: bool = False,
    batch: int | None = None,
) -> BcResult:
    """Betweenness of every vertex (and edge) summed over ``sources``.

    Sources are split across ``workers`` processes, each accumulating into
    private arrays that are added up at the end.  ``strict`` cuts sources
    into fixed blocks and reduces them in block order, which makes the output
    bitwise independent of ``workers``.  ``fine_workers`` > 1 runs each relax
    round on that many threads with per-target locking.
    """
    if not isinstance(strategy, Strategy):
        raise TypeError("strategy must be a Strategy")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    check_normalization(normalization)
    if g.m and not (g.weights > 0).all():
        raise ValueError("all edge weights must be positive")
    t0 = time.perf_counter()
    src = resolve_sources(g, sources)
    opts = dict(compute_edge_bc=compute_edge_bc, eq_rtol=eq_rtol, fine_workers=fine_workers,
                schedule_seed=schedule_seed, check_levels=check_levels)

    if strict:
        size = STRICT_BLOCK
        blocks = [src[i:i + size] for i in range(0, len(src), size)]
        opts.update(batch=size, ordered=True)
    else:
        share = -(-len(src) // workers) if len(src) else 1
        blocks = [src[i:i + share] for i in range(0, len(src), share)]
        opts.update(batch=batch)

    if workers == 1 or len(blocks) <= 1:
        done = list(enumerate(run_sources(g, blk, strategy, **opts) for blk in blocks))
    else:
        pool = _pool(workers)
        futures = {pool.submit(run_sources, g, blk, strategy, **opts): i for i, blk in enumerate(blocks)}
        done = [(futures[f], f.result()) for f in as_completed(futures)]
        if strict:
            done.sort(key=lambda item: item[0])

    node_bc = np.zeros(g.n)
    edge_bc = np.zeros(g.m) if compute_edge_bc else None
    depth = np.zeros(len(src), dtype=np.int64)
    starts = np.cumsum([0] + [len(blk) for blk in blocks])
    counters = {"work_items": 0, "active_lanes": 0, "edges_relaxed": 0, "rounds": 0}
    for i, (bc, ebc, dep, cnt) in done:
        node_bc += bc
        if edge_bc is not None:
            edge_bc += ebc
        depth[starts[i]:starts[i + 1]] = dep
        for key, val in cnt.items():
            counters[key] += val

    if normalization == "halved":
        node_bc *= 0.5
        if edge_bc is not None:
            edge_bc *= 0.5
    counters["strategy"] = strategy.name
    counters["workers"] = workers
    return BcResult(node_bc=node_bc, edge_bc=edge_bc, depth_per_source=depth,
                    elapsed=time.perf_counter() - t0, sources=src, stats=counters)

