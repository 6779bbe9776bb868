"""Edge-list ingestion and compressed sparse row storage for undirected weighted graphs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO

import numpy as np


class EdgeListError(ValueError):
    """A data line could not be parsed."""

    def __init__(self, lineno: int, line: str, reason: str):
        self.lineno = lineno
        self.line = line
        super().__init__(f"line {lineno}: {reason}: {line.strip()!r}")


class ValidationError(ValueError):
    pass


@dataclass
class EdgeList:
    """Parallel arrays of (u, v, w) entries with raw node ids.

    ``num_nodes`` declares the id range ``0..num_nodes-1`` up front, so that
    generated graphs keep isolated vertices and an identity id mapping.
    """

    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    num_nodes: int | None = None
    dropped_self_loops: int = 0

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.int64).reshape(-1)
        self.v = np.asarray(self.v, dtype=np.int64).reshape(-1)
        self.w = np.asarray(self.w, dtype=np.float64).reshape(-1)
        if not (len(self.u) == len(self.v) == len(self.w)):
            raise ValueError("u, v and w must have equal length")

    @classmethod
    def from_tuples(cls, entries: Iterable[tuple], num_nodes: int | None = None) -> EdgeList:
        rows = [(int(e[0]), int(e[1]), float(e[2]) if len(e) > 2 else 1.0) for e in entries]
        if not rows:
            return cls(np.empty(0), np.empty(0), np.empty(0), num_nodes=num_nodes)
        u, v, w = zip(*rows)
        return cls(np.array(u), np.array(v), np.array(w), num_nodes=num_nodes)

    def __len__(self) -> int:
        return len(self.u)

    def __iter__(self) -> Iterator[tuple[int, int, float]]:
        return zip(self.u.tolist(), self.v.tolist(), self.w.tolist())

    def __eq__(self, other):
        if not isinstance(other, EdgeList):
            return NotImplemented
        return list(self) == list(other)

    def with_weights(self, w) -> EdgeList:
        return EdgeList(self.u.copy(), self.v.copy(), np.broadcast_to(w, self.u.shape).copy(),
                        num_nodes=self.num_nodes, dropped_self_loops=self.dropped_self_loops)


def validate_edges(edges: EdgeList) -> EdgeList:
    """Drop self-loops and reject non-positive or non-finite weights."""
    bad = ~(np.isfinite(edges.w) & (edges.w > 0))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ValidationError(
            f"edge ({edges.u[i]}, {edges.v[i]}) has weight {edges.w[i]!r}; weights must be positive"
        )
    if len(edges) and (edges.u.min() < 0 or edges.v.min() < 0):
        raise ValidationError("node ids must be non-negative")
    keep = edges.u != edges.v
    dropped = int(len(edges) - keep.sum())
    return EdgeList(edges.u[keep], edges.v[keep], edges.w[keep], num_nodes=edges.num_nodes,
                    dropped_self_loops=edges.dropped_self_loops + dropped)


def parse_edge_list(stream: TextIO | Iterable[str], default_weight: float = 1.0) -> EdgeList:
    """Read whitespace-separated ``u v [w]`` lines; ``#`` starts a comment line."""
    us, vs, ws = [], [], []
    for lineno, line in enumerate(stream, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split()
        if len(parts) < 2:
            raise EdgeListError(lineno, line, "expected 'u v' or 'u v w'")
        if len(parts) > 3:
            raise EdgeListError(lineno, line, "too many fields")
        try:
            u, v = int(parts[0], 10), int(parts[1], 10)
        except ValueError:
            raise EdgeListError(lineno, line, "node ids must be base-10 integers") from None
        if u < 0 or v < 0:
            raise EdgeListError(lineno, line, "node ids must be non-negative")
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise EdgeListError(lineno, line, "weight is not a number") from None
        else:
            w = float(default_weight)
        if not (w > 0 and math.isfinite(w)):
            raise ValidationError(f"line {lineno}: weight {w!r} must be positive")
        us.append(u)
        vs.append(v)
        ws.append(w)
    return validate_edges(EdgeList(np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64),
                                   np.array(ws, dtype=np.float64)))


@dataclass(frozen=True, eq=False)
class CsrGraph:
    """Immutable CSR form of an undirected weighted graph.

    Every undirected edge occupies two directed slots, one in each endpoint's
    row, sharing a weight and a canonical ``edge_id``.  ``edge_u``/``edge_v``
    hold the dense endpoints of each canonical edge (``edge_u < edge_v``) and
    ``node_ids`` maps dense ids back to the ids of the input.
    """

    n: int
    m: int
    offsets: np.ndarray
    adjacency: np.ndarray
    weights: np.ndarray
    edge_id: np.ndarray
    min_incident_weight: np.ndarray
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_w: np.ndarray
    node_ids: np.ndarray
    merged_duplicates: int = 0
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def degree(self) -> np.ndarray:
        return np.diff(self.offsets)

    def neighbors(self, v: int) -> np.ndarray:
        return self.adjacency[self.offsets[v]:self.offsets[v + 1]]

    def dense_id(self, original: int) -> int:
        if not self._index:
            self._index.update((int(o), i) for i, o in enumerate(self.node_ids.tolist()))
        return self._index[int(original)]

    def to_edge_list(self, original_ids: bool = True) -> EdgeList:
        u, v = self.edge_u, self.edge_v
        if original_ids:
            u, v = self.node_ids[u], self.node_ids[v]
        return EdgeList(u.copy(), v.copy(), self.edge_w.copy(), num_nodes=None)

    def with_unit_weights(self) -> CsrGraph:
        return CsrGraph(
            n=self.n, m=self.m, offsets=self.offsets, adjacency=self.adjacency,
            weights=np.ones_like(self.weights), edge_id=self.edge_id,
            min_incident_weight=np.where(self.degree > 0, 1.0, np.inf),
            edge_u=self.edge_u, edge_v=self.edge_v, edge_w=np.ones_like(self.edge_w),
            node_ids=self.node_ids, merged_duplicates=self.merged_duplicates,
        )

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_index"] = {}
        return state

    def __setstate__(self, state):
        self.__dict__.update(state)


def build_csr(edges: EdgeList) -> CsrGraph:
    """Compact ids (first appearance order), merge duplicates to min weight, emit CSR."""
    edges = validate_edges(edges)
    raw = np.column_stack([edges.u, edges.v]).reshape(-1)
    declared = np.arange(edges.num_nodes or 0, dtype=np.int64)
    seq = np.concatenate([declared, raw])
    uniq, first = np.unique(seq, return_index=True)
    node_ids = uniq[np.argsort(first, kind="stable")]
    n = len(node_ids)
    # dense id of every raw id through the sorted unique table
    dense_of_sorted = np.empty(n, dtype=np.int64)
    dense_of_sorted[np.argsort(first, kind="stable")] = np.arange(n)
    du = dense_of_sorted[np.searchsorted(uniq, edges.u)]
    dv = dense_of_sorted[np.searchsorted(uniq, edges.v)]

    a, b = np.minimum(du, dv), np.maximum(du, dv)
    order = np.lexsort((edges.w, b, a))
    a, b, w = a[order], b[order], edges.w[order]
    if len(a):
        first_of_pair = np.ones(len(a), dtype=bool)
        first_of_pair[1:] = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
        a, b, w = a[first_of_pair], b[first_of_pair], w[first_of_pair]
    merged = len(order) - len(a)
    m = len(a)

    src = np.concatenate([a, b])
    dst = np.concatenate([b, a])
    eid = np.concatenate([np.arange(m), np.arange(m)])
    slot_order = np.lexsort((dst, src))
    src, dst, eid = src[slot_order], dst[slot_order], eid[slot_order]
    wts = np.concatenate([w, w])[slot_order]

    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
    min_w = np.full(n, np.inf)
    if m:
        np.minimum.at(min_w, src, wts)

    return CsrGraph(
        n=n, m=m, offsets=offsets, adjacency=dst.astype(np.int64), weights=wts.astype(np.float64),
        edge_id=eid.astype(np.int64), min_incident_weight=min_w,
        edge_u=a.astype(np.int64), edge_v=b.astype(np.int64), edge_w=w.astype(np.float64),
        node_ids=node_ids, merged_duplicates=int(merged),
    )


def graph_stats(g: CsrGraph) -> dict:
    deg = g.degree
    return {
        "n": g.n,
        "m": g.m,
        "max_degree": int(deg.max()) if g.n else 0,
        "avg_degree": 2.0 * g.m / g.n if g.n else 0.0,
    }


def format_number(x: float) -> str:
    """Shortest exact text: integral values without a fraction, others via repr."""
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)
