"""Seeded synthetic graphs: uniform G(n, m), R-MAT style Kronecker, integer weights."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .graph import EdgeList, format_number

DEFAULT_INITIATOR = ((0.57, 0.19), (0.19, 0.05))
DEFAULT_WEIGHT_RANGE = (1, 10)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def split_seed(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    """Independent (topology, weight) streams derived from one seed."""
    topo, weights = np.random.SeedSequence(seed).spawn(2)
    return topo, weights


def target_edge_count(n: int, avg_degree: float) -> int:
    if avg_degree < 0:
        raise ValueError("avg_degree must be >= 0")
    m = round(n * avg_degree / 2)
    if m > n * (n - 1) // 2:
        raise ValueError(f"{m} edges requested but only {n * (n - 1) // 2} vertex pairs exist")
    return m


def _unrank_pairs(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # pair index k = b*(b-1)/2 + a with 0 <= a < b
    b = ((1 + np.sqrt(1 + 8 * k.astype(np.float64))) // 2).astype(np.int64)
    b -= (b * (b - 1) // 2) > k
    b += ((b + 1) * b // 2) <= k
    a = k - b * (b - 1) // 2
    return a, b


def gen_er(n: int, avg_degree: float, seed) -> EdgeList:
    """Exactly round(n * avg_degree / 2) distinct pairs drawn uniformly, unit weights."""
    if n < 1:
        raise ValueError("n must be >= 1")
    m = target_edge_count(n, avg_degree)
    pairs = n * (n - 1) // 2
    k = _rng(seed).choice(pairs, size=m, replace=False) if m else np.zeros(0, dtype=np.int64)
    a, b = _unrank_pairs(np.asarray(k, dtype=np.int64))
    return EdgeList(a, b, np.ones(m), num_nodes=n)


def gen_kronecker(scale: int, avg_degree: float, seed, initiator=DEFAULT_INITIATOR,
                  retry_factor: float = 20.0) -> EdgeList:
    """R-MAT descent: each sample picks one quadrant per level of the 2^scale grid.

    Self-loops and repeated pairs are thrown away and redrawn until the target
    count is met or ``retry_factor * m`` samples have been spent.
    """
    if scale < 1:
        raise ValueError("scale must be >= 1")
    p = np.asarray(initiator, dtype=np.float64).reshape(-1)
    if p.shape != (4,) or (p < 0).any() or (p > 1).any() or p.sum() <= 0:
        raise ValueError("initiator must be a 2x2 matrix of probabilities in [0, 1]")
    p = p / p.sum()
    n = 1 << scale
    m = target_edge_count(n, avg_degree)
    rng = _rng(seed)
    bit = (1 << np.arange(scale - 1, -1, -1)).astype(np.int64)
    seen: set[int] = set()
    us, vs = [], []
    budget = max(int(math.ceil(retry_factor * m)), 1)
    drawn = 0
    while len(us) < m and drawn < budget:
        k = min(budget - drawn, max(64, int(1.25 * (m - len(us)))))
        q = rng.choice(4, size=(k, scale), p=p)
        row = (q >> 1) @ bit
        col = (q & 1) @ bit
        drawn += k
        a, b = np.minimum(row, col), np.maximum(row, col)
        for x, y in zip(a.tolist(), b.tolist()):
            key = x * n + y
            if x == y or key in seen:
                continue
            seen.add(key)
            us.append(x)
            vs.append(y)
            if len(us) == m:
                break
    if len(us) < m:
        warnings.warn(f"kronecker sampling stopped at {len(us)} of {m} edges after {drawn} draws",
                      RuntimeWarning, stacklevel=2)
    return EdgeList(np.array(us, dtype=np.int64), np.array(vs, dtype=np.int64),
                    np.ones(len(us)), num_nodes=n)


def assign_weights(edges: EdgeList, lo: int, hi: int, seed) -> EdgeList:
    """Independent uniform integer weight in [lo, hi] per edge."""
    if not (1 <= lo <= hi):
        raise ValueError("weight range needs 1 <= lo <= hi")
    w = _rng(seed).integers(lo, hi, size=len(edges), endpoint=True).astype(np.float64)
    return edges.with_weights(w)


@dataclass(frozen=True)
class GenSpec:
    model: str
    size: int
    avg_degree: float
    seed: int
    weight_range: tuple[int, int] = DEFAULT_WEIGHT_RANGE
    initiator: tuple = DEFAULT_INITIATOR

    def __post_init__(self):
        if self.model not in ("er", "kronecker"):
            raise ValueError(f"unknown model {self.model!r}")
        lo, hi = self.weight_range
        if self.avg_degree < 0 or lo < 1 or hi < lo:
            raise ValueError("need avg_degree >= 0 and 1 <= lo <= hi")

    @property
    def n(self) -> int:
        return 1 << self.size if self.model == "kronecker" else self.size

    def describe(self) -> str:
        size = f"scale={self.size}" if self.model == "kronecker" else f"nodes={self.size}"
        text = (f"model={self.model} {size} avg_degree={self.avg_degree:g} seed={self.seed} "
                f"weight_lo={self.weight_range[0]} weight_hi={self.weight_range[1]}")
        if self.model == "kronecker":
            text += " initiator=" + ",".join(f"{x:g}" for x in np.ravel(self.initiator))
        return text


def generate(spec: GenSpec) -> EdgeList:
    topo, weights = split_seed(spec.seed)
    if spec.model == "er":
        edges = gen_er(spec.size, spec.avg_degree, topo)
    else:
        edges = gen_kronecker(spec.size, spec.avg_degree, topo, spec.initiator)
    return assign_weights(edges, *spec.weight_range, weights)


def format_edge_list(edges: EdgeList, header: str = "") -> str:
    lines = [f"# {line}" for line in header.splitlines()]
    lines += [f"{u} {v} {format_number(w)}" for u, v, w in edges]
    return "\n".join(lines) + "\n"
