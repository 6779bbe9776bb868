"""Acceptance criteria, one test per criterion, one PASS/FAIL line each."""

import hashlib
import heapq
import os
import statistics
import time

import numpy as np
import pytest

from frontier_bc.bench import max_rel_error, scores_match
from frontier_bc.cli import main
from frontier_bc.engine import (FrontierMode, SettleRule, Strategy, bc_parallel, compute_threshold,
                                default_workers, init_state, relax_frontier, settle_and_advance,
                                shortest_paths)
from frontier_bc.generators import GenSpec, assign_weights, gen_er, gen_kronecker, generate
from frontier_bc.graph import build_csr
from frontier_bc.oracle import brandes_sequential, brute_force_bc

from conftest import (TIE_EDGES, complete_graph, cycle_graph, graph, path_graph, random_weighted,
                      star_graph)

SC, Q = FrontierMode.SCAN_ALL, FrontierMode.QUEUE
CRITERION1_STRATEGIES = [Strategy(SC, 1), Strategy(Q, 1), Strategy(SC, 32), Strategy(Q, 32), Strategy(Q, 4)]


@pytest.fixture
def report(capsys):
    def emit(number, ok, text):
        with capsys.disabled():
            print(f"\ncriterion {number} [{'PASS' if ok else 'FAIL'}] {text}")
        assert ok, text
    return emit


def heap_sigma(g, s):
    """Textbook heap Dijkstra with path counting; independent of the engine."""
    d = [np.inf] * g.n
    sigma = [0] * g.n
    d[s], sigma[s] = 0.0, 1
    done = [False] * g.n
    heap = [(0.0, s)]
    while heap:
        dv, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for i in range(g.offsets[v], g.offsets[v + 1]):
            t, nd = int(g.adjacency[i]), dv + float(g.weights[i])
            if nd < d[t]:
                d[t], sigma[t] = nd, sigma[v]
                heapq.heappush(heap, (nd, t))
            elif nd == d[t]:
                sigma[t] += sigma[v]
    return d, sigma


def test_c1_oracle_equivalence(report):
    t0 = time.perf_counter()
    graphs, worst_engine, worst_brute = 0, 0.0, 0.0
    failures = []
    for seed in range(200):
        rng = np.random.default_rng(10_000 + seed)
        model = "er" if seed % 2 == 0 else "kronecker"
        n = int(rng.integers(5, 201)) if model == "er" else 1 << int(rng.integers(3, 8))
        g = random_weighted(rng.integers(2**63), n=n, avg_degree=rng.uniform(1, 16), model=model)
        ref = brandes_sequential(g, compute_edge_bc=True)
        brute = brute_force_bc(g, compute_edge_bc=True)
        worst_brute = max(worst_brute, max_rel_error(ref.node_bc, brute.node_bc),
                          max_rel_error(ref.edge_bc, brute.edge_bc))
        if not (scores_match(ref.node_bc, brute.node_bc, 1e-9) and scores_match(ref.edge_bc, brute.edge_bc, 1e-9)):
            failures.append(f"graph {seed}: brute force")
        for strategy in CRITERION1_STRATEGIES:
            for workers in (1, 4):
                got = bc_parallel(g, strategy, workers=workers, compute_edge_bc=True)
                worst_engine = max(worst_engine, max_rel_error(got.node_bc, ref.node_bc),
                                   max_rel_error(got.edge_bc, ref.edge_bc))
                if not (scores_match(got.node_bc, ref.node_bc, 1e-6)
                        and scores_match(got.edge_bc, ref.edge_bc, 1e-6)):
                    failures.append(f"graph {seed}: {strategy.name} workers={workers}")
        graphs += 1
    elapsed = time.perf_counter() - t0
    ok = not failures and graphs >= 200 and elapsed < 300
    report(1, ok, f"oracle equivalence: {graphs} graphs x {len(CRITERION1_STRATEGIES)} strategies x workers {{1,4}}; "
                  f"max rel err engine {worst_engine:.2e} (tol 1e-6), brute {worst_brute:.2e} (tol 1e-9); "
                  f"{elapsed:.1f}s (limit 300s); failures {failures[:5]}")


def test_c2_strict_versus_inclusive_settlement(report):
    g = graph(TIE_EDGES)
    problems = []
    for strategy in CRITERION1_STRATEGIES:
        state = init_state(g, 0, strategy)
        relax_frontier(g, state, strategy)
        compute_threshold(g, state, strategy)
        settle_and_advance(g, state, strategy)
        first = set(state.level_members(0, 1).tolist())
        shortest_paths(g, state, strategy)
        if first != {1} or state.sigma[0, 3] != 2:
            problems.append(f"strict {strategy.name}: first={first} sigma={state.sigma[0, 3]}")

        loose = init_state(g, 0, strategy)
        shortest_paths(g, loose, strategy, rule=SettleRule.INCLUSIVE)
        if loose.sigma[0, 3] != 1 or loose.d[0].tolist() != [0, 1, 2, 3]:
            problems.append(f"inclusive {strategy.name}: sigma={loose.sigma[0, 3]} d={loose.d[0].tolist()}")
    report(2, not problems, "strict settlement gives sigma(v0->v3)=2 with first round {v1}; "
                            f"inclusive variant gives sigma=1 with distances [0,1,2,3]; problems {problems}")


def closed_form_cases():
    for k in range(2, 13):
        yield f"P{k}", path_graph(k), [2.0 * i * (k - 1 - i) for i in range(k)]
    for leaves in range(1, 10):
        n = leaves + 1
        yield f"star{n}", star_graph(leaves), [float((n - 1) * (n - 2))] + [0.0] * leaves
    yield "C4", cycle_graph(4), [1.0] * 4
    for k in range(2, 9):
        yield f"K{k}", complete_graph(k), [0.0] * k


def test_c3_closed_forms(report):
    bad = []
    count = 0
    for name, g, want in closed_form_cases():
        want = np.array(want)
        results = {"brandes": brandes_sequential(g).node_bc, "brute": brute_force_bc(g).node_bc}
        for strategy in CRITERION1_STRATEGIES:
            results[strategy.name] = bc_parallel(g, strategy).node_bc
        for who, got in results.items():
            count += 1
            if not np.allclose(got, want, rtol=0, atol=1e-9):
                bad.append(f"{name}/{who}")
    report(3, not bad, f"closed forms for paths, stars, C4, complete graphs: {count} checks within 1e-9; "
                       f"mismatches {bad}")


def test_c4_race_stress(report):
    # source -> 64 mids (weight 1) -> one target, mid weights alternate 1 and 2
    mids = 64
    entries = [(0, 1 + i, 1.0) for i in range(mids)]
    entries += [(1 + i, mids + 1, 1.0 if i % 2 == 0 else 2.0) for i in range(mids)]
    entries.append((mids + 1, mids + 2, 1.0))
    g = graph(entries)
    target = g.dense_id(mids + 1)
    _, want = heap_sigma(g, g.dense_id(0))
    threads = max(default_workers(), 8)
    workers = default_workers()
    oracle_bc = brandes_sequential(g).node_bc
    mismatches, frontier_sizes = [], set()
    strategy = Strategy(Q, 1)
    for rep in range(100):
        state = init_state(g, g.dense_id(0), strategy)
        rng = np.random.default_rng(rep)
        shortest_paths(g, state, strategy, fine_workers=threads, rng=rng)
        frontier_sizes.add(int(state.ends[0, 2] - state.ends[0, 1]))
        if state.sigma[0].astype(np.int64).tolist() != want:
            mismatches.append(rep)
        if rep % 10 == 0:
            got = bc_parallel(g, Strategy(Q, 4 if rep % 20 else 32), workers=workers,
                              fine_workers=threads, schedule_seed=rep)
            if not np.array_equal(got.node_bc, oracle_bc):
                mismatches.append(f"bc@{rep}")
    ok = not mismatches and frontier_sizes == {mids} and want[target] == mids // 2
    report(4, ok, f"race stress: {mids} frontier vertices into one target, {threads} threads, "
                  f"100 shuffled schedules; sigma(target)={want[target]} expected {mids // 2}; "
                  f"mismatching reps {mismatches}")


# avg_depth over the sources 0, 64, ..., 4032; values from the build-time run
DEPTH_SOURCES = np.arange(0, 1 << 12, 64)
PINNED_DEPTH = {("er", 4): 38.15625, ("er", 32): 10.15625, ("kronecker", 4): 18.5625}


def test_c5_depth_ordering(report):
    depth = {}
    for model, deg in PINNED_DEPTH:
        size = 1 << 12 if model == "er" else 12
        g = build_csr(generate(GenSpec(model, size, deg, 2024)))
        depth[model, deg] = bc_parallel(g, Strategy(Q, 1), sources=DEPTH_SOURCES).avg_depth
    pinned = all(depth[k] == v for k, v in PINNED_DEPTH.items())
    ordered = depth["er", 4] > depth["er", 32] and depth["kronecker", 4] < depth["er", 4]
    report(5, pinned and ordered, f"depth ordering: ER deg4 {depth['er', 4]} > ER deg32 {depth['er', 32]}; "
                                  f"Kronecker deg4 {depth['kronecker', 4]} < ER deg4; pinned match {pinned}")


def physical_cores():
    try:
        usable = len(os.sched_getaffinity(0))
    except AttributeError:
        usable = os.cpu_count() or 1
    try:
        import psutil
        physical = psutil.cpu_count(logical=False) or usable
    except ImportError:
        physical = usable
    return min(physical, usable)


def test_c6_coarse_grain_scaling(report, capsys):
    cores = physical_cores()
    if cores < 4:
        with capsys.disabled():
            print(f"\ncriterion 6 [SKIP] coarse-grain scaling needs >= 4 physical cores, this machine has {cores}")
        pytest.skip(f"needs >= 4 physical cores, found {cores}")
    g = build_csr(generate(GenSpec("kronecker", 13, 8, 2024)))
    strategy = Strategy(Q, 1)
    times = {}
    for workers in (1, 4):
        runs = []
        for _ in range(3):
            t0 = time.perf_counter()
            bc_parallel(g, strategy, workers=workers)
            runs.append(time.perf_counter() - t0)
        times[workers] = statistics.median(runs)
    speedup = times[1] / times[4]
    report(6, speedup >= 2.0, f"coarse-grain scaling: workers=4 {times[4]:.2f}s vs workers=1 {times[1]:.2f}s, "
                              f"speedup {speedup:.2f} (need >= 2.0)")


def test_c7_strict_bitwise_determinism(report, capsys, tmp_path):
    path = tmp_path / "kron.txt"
    assert main(["generate", "--model", "kronecker", "--scale", "9", "--avg-degree", "8", "--seed", "77",
                 "-o", str(path)]) == 0
    digests = {}
    for run in range(2):
        for workers in (1, 2, 4):
            out = tmp_path / f"bc_{run}_{workers}.tsv"
            assert main(["compute", str(path), "--strict", "--edge-bc", "--strategy", "we-warp8",
                         "--workers", str(workers), "-o", str(out)]) == 0
            digests[run, workers] = hashlib.sha256(out.read_bytes()).hexdigest()
    capsys.readouterr()
    report(7, len(set(digests.values())) == 1,
           f"strict reduction: {len(digests)} runs over workers {{1,2,4}} x 2 give "
           f"{len(set(digests.values()))} distinct TSV digest(s)")


def test_c8_generator_contracts(report, capsys, tmp_path):
    checks = {}
    checks["er(10,0) has 0 edges"] = len(gen_er(10, 0, 1)) == 0
    er = gen_er(16, 4, 5)
    pairs = {(min(u, v), max(u, v)) for u, v, _ in er}
    checks["er(16,4) has 32 distinct simple edges"] = len(er) == 32 == len(pairs) and all(u != v for u, v in pairs)
    kr = gen_kronecker(4, 4, 5)
    checks["kronecker(4,4) has n=16, ids < 16"] = kr.num_nodes == 16 and max(max(u, v) for u, v, _ in kr) < 16
    checks["kronecker(10,8) has exactly 4096 edges"] = len(gen_kronecker(10, 8, 5)) == 4096
    w = assign_weights(gen_er(1000, 200, 9), 1, 10, 9).w
    checks["1e5 weights within [1,10], mean in [5.4,5.6]"] = (
        len(w) == 100_000 and w.min() >= 1 and w.max() <= 10 and np.all(w == np.round(w)) and 5.4 <= w.mean() <= 5.6)
    for model, size in (("er", ["--nodes", "500"]), ("kronecker", ["--scale", "9"])):
        blobs = []
        for i in range(2):
            out = tmp_path / f"{model}{i}.txt"
            main(["generate", "--model", model, *size, "--avg-degree", "6", "--seed", "31", "-o", str(out)])
            blobs.append(out.read_bytes())
        checks[f"{model} regeneration byte-identical"] = blobs[0] == blobs[1] and len(blobs[0]) > 0
    capsys.readouterr()
    failed = [k for k, v in checks.items() if not v]
    report(8, not failed, f"generator contracts: {len(checks)} checks; failed {failed}")
