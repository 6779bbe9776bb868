"""Frontier-parallel betweenness centrality for weighted undirected graphs."""

from .bench import BenchRecord, run_bench, write_csv
from .engine import FrontierMode, Strategy, TraversalState, bc_parallel, init_state
from .generators import assign_weights, gen_er, gen_kronecker
from .graph import CsrGraph, EdgeList, build_csr, graph_stats, parse_edge_list
from .oracle import BcResult, brandes_sequential, brute_force_bc

__all__ = [
    "BcResult", "BenchRecord", "CsrGraph", "EdgeList", "FrontierMode", "Strategy", "TraversalState",
    "assign_weights", "bc_parallel", "brandes_sequential", "brute_force_bc", "build_csr", "gen_er",
    "gen_kronecker", "graph_stats", "init_state", "parse_edge_list", "run_bench", "write_csv",
]
