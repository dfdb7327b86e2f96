"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import time

import numpy as np
import pytest

from quboplan import (
    ChimeraGraph,
    clustered_embedding,
    cost,
    decode_logical,
    drop_broken_chains,
    generate_instance,
    logical_map,
    repair_selection,
    simulated_annealing,
    triad_embedding,
    validate_solution,
)
from quboplan.bench import BenchSuite, FamilySpec, SolverSpec, curve_rows, read_curves_csv, run_suite, write_curves_csv
from quboplan.chimera import LEFT, RIGHT
from quboplan.mqo import brute_force_mqo
from quboplan.solvers import ANNEAL_RUN_MS, AnnealParams
from quboplan.verify import chain_consistency_suite, oracle_equivalence_suite

TOL = 1e-9


def report(criterion, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


@pytest.fixture(scope="module")
def equivalence_outcomes():
    start = time.perf_counter()
    outcomes = oracle_equivalence_suite(
        instances=200, max_queries=6, max_plans=3, max_density=0.4, seed=11
    )
    return outcomes, time.perf_counter() - start


def test_criterion_1_optimum_equivalence(equivalence_outcomes):
    outcomes, elapsed = equivalence_outcomes
    equiv = next(o for o in outcomes if o.label == "optimum equivalence")
    ok = equiv.failed == 0 and elapsed < 60.0
    report(
        "criterion 1 (decoded QUBO optimum equals enumeration optimum, atol 1e-9)",
        ok,
        f"{equiv.passed}/200 equivalent in {elapsed:.1f}s",
    )


def test_criterion_2_validity_and_negative_control(equivalence_outcomes):
    outcomes, _elapsed = equivalence_outcomes
    valid = next(o for o in outcomes if o.label == "decoded validity")
    broken = oracle_equivalence_suite(
        instances=200, max_queries=6, max_plans=3, max_density=0.4, seed=11,
        break_conflict_weight=True,
    )
    broken_valid = next(o for o in broken if o.label == "decoded validity")
    ok = valid.failed == 0 and broken_valid.failed >= 1
    report(
        "criterion 2 (every optimum decodes valid; lowered conflict weight breaks validity)",
        ok,
        f"{valid.passed}/200 valid; negative control produced {broken_valid.failed} invalid optima",
    )


def test_criterion_3_chain_consistency():
    start = time.perf_counter()
    outcomes = chain_consistency_suite(cases=100, seed=7)
    elapsed = time.perf_counter() - start
    consistent = next(o for o in outcomes if o.label == "chain consistency at optimum")
    preserved = next(o for o in outcomes if o.label == "optimum energy preserved")
    ok = consistent.failed == 0 and preserved.failed == 0 and elapsed < 120.0
    report(
        "criterion 3 (all physical ground states have uniform chains and preserve the optimum)",
        ok,
        f"{consistent.passed}/100 consistent, {preserved.passed}/100 preserved in {elapsed:.1f}s",
    )


def test_criterion_4_pattern_sizes_and_broken_chains():
    g = ChimeraGraph(12, 12)
    sizes = {c: triad_embedding(c, g).qubits_used() for c in (5, 8, 12)}
    lengths5 = sorted(len(ch) for ch in triad_embedding(5, g).chains.values())
    emb12 = triad_embedding(12, g)
    masked = ChimeraGraph(
        12, 12, broken=frozenset({g.qubit(1, 0, LEFT, 2), g.qubit(2, 0, RIGHT, 0)})
    )
    kept = drop_broken_chains(emb12, masked)
    dropped = sorted(set(emb12.chains) - set(kept.chains))
    ok = (
        sizes == {5: 8, 8: 24, 12: 48}
        and lengths5 == [1, 1, 2, 2, 2]
        and dropped == [2, 8]
        and kept.num_chains == 10
    )
    report(
        "criterion 4 (pattern qubit counts 8/24/48; broken qubits drop exactly their chains)",
        ok,
        f"sizes {sizes}, five-chain lengths {lengths5}, dropped chains {dropped}",
    )


def test_criterion_5_asymptotic_qubit_usage():
    g = ChimeraGraph(100, 100)
    counts = [20, 40, 80, 160, 320]
    usage = [clustered_embedding([c], g).qubits_used() for c in counts]
    chain_slope = float(np.polyfit(np.log(counts), np.log(usage), 1)[0])

    wide = ChimeraGraph(3, 400)
    ns = [2, 4, 8, 16, 32, 64]
    usage_n = [clustered_embedding([8] * n, wide).qubits_used() for n in ns]
    cluster_slope = float(np.polyfit(np.log(ns), np.log(usage_n), 1)[0])

    ok = abs(chain_slope - 2.0) <= 0.15 and abs(cluster_slope - 1.0) <= 0.1
    report(
        "criterion 5 (qubit usage: slope 2.0±0.15 in chains/cluster, 1.0±0.1 in clusters)",
        ok,
        f"chain slope {chain_slope:.3f}, cluster slope {cluster_slope:.3f}",
    )


def test_criterion_6_protocol_shape_and_sampler_quality(tmp_path):
    start = time.perf_counter()
    # Protocol shape: per-batch annealing curves, classical curves at the
    # truncated desk-scale checkpoints, lossless CSV round-trip.
    suite = BenchSuite(
        families=[FamilySpec("desk-20x2", 20, 2, 2)],
        solvers=[
            SolverSpec("sa", "sa"),
            SolverSpec("climb", "climb"),
            SolverSpec("ga-50", "ga", {"population": 50}),
            SolverSpec("exact", "exact"),
        ],
        checkpoints_ms=(1.0, 10.0, 100.0, 1000.0),
        master_seed=606,
    )
    result = run_suite(suite, out_dir=str(tmp_path / "report"), figures=False)
    sa_curves = [c for c in result.curves if c.solver == "sa"]
    classic = [c for c in result.curves if c.solver in ("climb", "ga-50", "exact")]
    shape_ok = all(
        [p.runs for p in c.points] == [100 * b for b in range(1, 11)]
        and [p.time_ms for p in c.points]
        == pytest.approx([100 * b * ANNEAL_RUN_MS for b in range(1, 11)])
        for c in sa_curves
    ) and all(
        [p.time_ms for p in c.points] == [1.0, 10.0, 100.0, 1000.0] for c in classic
    )
    csv_path = tmp_path / "roundtrip.csv"
    write_curves_csv(csv_path, result.curves)
    roundtrip_ok = read_curves_csv(csv_path) == curve_rows(result.curves)

    # Sampler quality: best of 1000 runs within 1% of the enumeration
    # optimum on at least 90% of 50 seeded desk-scale instances.
    hits = 0
    for seed in range(50):
        inst = generate_instance(20, 2, 0.1, seed=seed)
        qubo, mapping = logical_map(inst)
        _sel, optimum = brute_force_mqo(inst)
        samples = simulated_annealing(qubo, AnnealParams(), seed=seed)
        best_sample, _e = min(samples, key=lambda s: s[1])
        selection = decode_logical(mapping, best_sample)
        if not validate_solution(inst, selection).valid:
            selection = repair_selection(inst, selection)
        if cost(inst, selection) <= optimum * 1.01 + TOL:
            hits += 1
    elapsed = time.perf_counter() - start
    ok = shape_ok and roundtrip_ok and hits >= 45 and elapsed < 300.0
    report(
        "criterion 6 (per-batch + checkpoint curves, CSV round-trip, sampler within 1% on >=90%)",
        ok,
        f"shape {shape_ok}, round-trip {roundtrip_ok}, {hits}/50 within 1% in {elapsed:.0f}s",
    )


def test_criterion_7_determinism(tmp_path):
    gen_ok = generate_instance(9, 3, 0.35, seed=5).dumps() == generate_instance(
        9, 3, 0.35, seed=5
    ).dumps()

    inst = generate_instance(6, 2, 0.3, seed=3)
    qubo, _ = logical_map(inst)
    params = AnnealParams(runs_per_batch=25, batches=4, sweeps=16)
    a = simulated_annealing(qubo, params, seed=8)
    b = simulated_annealing(qubo, params, seed=8)
    sa_ok = all(np.array_equal(x[0], y[0]) and x[1] == y[1] for x, y in zip(a, b))

    suite = BenchSuite(
        families=[FamilySpec("det", 4, 2, 3, savings_density=0.3)],
        solvers=[
            SolverSpec("sa", "sa", {"runs_per_batch": 10, "batches": 3, "sweeps": 16}),
            SolverSpec("climb", "climb"),
            SolverSpec("exact", "exact"),
        ],
        checkpoints_ms=(1.0, 10.0),
        master_seed=77,
    )
    dirs = [tmp_path / name for name in ("r1", "r2", "r3")]
    run_suite(suite, out_dir=str(dirs[0]), figures=False)
    run_suite(suite, out_dir=str(dirs[1]), figures=False)
    run_suite(suite, out_dir=str(dirs[2]), workers=2, figures=False)
    files = ["curves.csv", "summary.csv", "metadata.json"]
    bench_ok = all(
        (dirs[0] / f).read_bytes() == (d / f).read_bytes() for d in dirs[1:] for f in files
    )
    ok = gen_ok and sa_ok and bench_ok
    report(
        "criterion 7 (bit-identical outputs per seed, including parallel bench workers)",
        ok,
        f"generation {gen_ok}, sampler {sa_ok}, bench workers {bench_ok}",
    )
