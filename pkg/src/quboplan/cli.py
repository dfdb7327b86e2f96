"""Command-line pipeline: generate -> map -> embed -> solve, plus bench and verify.

Exit codes: 0 success, 1 verification failure, 2 input/flag error,
3 embedding does not fit.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .bench import BenchSuite, run_suite
from .chimera import (
    ChimeraGraph,
    FitError,
    clustered_embedding,
    drop_broken_chains,
    load_broken_mask,
    load_embedding,
    save_embedding,
    triad_embedding,
)
from .logical import brute_force_qubo, decode_logical, load_qubo, logical_map, save_qubo
from .mqo import (
    BudgetError,
    InstanceError,
    MqoInstance,
    brute_force_mqo,
    cost,
    generate_instance,
    validate_solution,
)
from .physical import (
    EmbeddingError,
    brute_force_physical,
    decode_physical,
    embed_qubo,
    load_physical,
    save_physical,
)
from .solvers import (
    AnnealParams,
    SolverRunRecord,
    anneal_cost_trace,
    genetic_algorithm,
    hill_climbing,
    simulated_annealing,
)
from .verify import chain_consistency_suite, oracle_equivalence_suite

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_FIT = 3


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        rows, cols = text.lower().split("x")
        return int(rows), int(cols)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must look like 12x12, got {text!r}") from exc


def _parse_checkpoints(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError("checkpoints must be comma-separated numbers") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quboplan",
        description="Compile plan-selection problems to QUBO form, embed them on a "
        "simulated Chimera lattice, and solve with annealing-style or classical solvers.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a random instance file")
    g.add_argument("--queries", type=int, required=True)
    g.add_argument("--plans", type=int, required=True)
    g.add_argument("--density", type=float, required=True, help="savings probability per inter-query plan pair")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--cost-range", type=float, nargs=2, default=(10.0, 20.0), metavar=("LO", "HI"))
    g.add_argument("--savings-range", type=float, nargs=2, default=(1.0, 5.0), metavar=("LO", "HI"))
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("map", help="translate an instance into a logical QUBO file")
    m.add_argument("--instance", required=True)
    m.add_argument("--margin", type=float, default=0.25)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_map)

    e = sub.add_parser("embed", help="embed a logical QUBO onto the Chimera grid")
    e.add_argument("--qubo", required=True)
    e.add_argument("--pattern", choices=("triad", "clustered"), default="triad")
    e.add_argument("--grid", type=_parse_grid, default=(12, 12))
    e.add_argument("--broken", help="JSON list of broken qubit ids")
    e.add_argument("--instance", help="instance file (cluster structure for --pattern clustered)")
    e.add_argument("--margin", type=float, default=0.25)
    e.add_argument("--out-physical", required=True)
    e.add_argument("--out-embedding", required=True)
    e.set_defaults(func=cmd_embed)

    s = sub.add_parser("solve", help="solve an instance, QUBO, or physical QUBO")
    s.add_argument("--algo", choices=("sa", "climb", "ga", "exact"), required=True)
    s.add_argument("--instance", required=True)
    s.add_argument("--qubo")
    s.add_argument("--physical")
    s.add_argument("--embedding")
    s.add_argument("--seed", type=int, help="required for sa, climb and ga")
    s.add_argument("--runs", type=int, default=1000, help="total annealing runs")
    s.add_argument("--batches", type=int, default=10)
    s.add_argument("--sweeps", type=int, default=64)
    s.add_argument("--population", type=int, default=50)
    s.add_argument("--deadline-ms", type=float, default=1000.0)
    s.add_argument("--checkpoints", type=_parse_checkpoints)
    s.add_argument("--margin", type=float, default=0.25)
    s.add_argument("--out", help="solution file")
    s.add_argument("--record", help="run-record file")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="run a benchmark suite from a config file")
    b.add_argument("--suite", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--no-figures", action="store_true")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run the randomized correctness suites")
    v.add_argument("--instances", type=int, default=200)
    v.add_argument("--max-queries", type=int, default=6)
    v.add_argument("--max-plans", type=int, default=3)
    v.add_argument("--max-density", type=float, default=0.4)
    v.add_argument("--seed", type=int, default=11)
    v.add_argument("--chain-cases", type=int, default=100)
    v.add_argument("--margin", type=float, default=0.25)
    v.add_argument("--break-wm", action="store_true",
                   help="negative control: lower the conflict weight to the coverage weight")
    v.set_defaults(func=cmd_verify)
    return parser


def cmd_generate(parser, args) -> int:
    if not 0.0 <= args.density <= 1.0:
        parser.error(f"--density must lie in [0, 1], got {args.density}")
    if args.queries < 1 or args.plans < 1:
        parser.error("--queries and --plans must be at least 1")
    instance = generate_instance(
        args.queries,
        args.plans,
        args.density,
        cost_range=tuple(args.cost_range),
        savings_range=tuple(args.savings_range),
        seed=args.seed,
    )
    instance.save(args.out)
    print(f"wrote {args.out}: {len(instance.queries)} queries, "
          f"{len(instance.plans)} plans, {len(instance.savings)} savings pairs")
    return EXIT_OK


def cmd_map(parser, args) -> int:
    instance = MqoInstance.load(args.instance)
    qubo, mapping = logical_map(instance, args.margin)
    save_qubo(args.out, qubo, mapping)
    negative = sum(1 for w in qubo.quadratic.values() if w < 0)
    print(f"wrote {args.out}: {qubo.num_vars} variables, "
          f"{len(qubo.quadratic)} quadratic terms ({negative} negative)")
    print(f"coverage weight {mapping.coverage_weight}, conflict weight {mapping.conflict_weight}, "
          f"margin {mapping.margin}")
    return EXIT_OK


def cmd_embed(parser, args) -> int:
    qubo, _mapping = load_qubo(args.qubo)
    broken = load_broken_mask(args.broken) if args.broken else frozenset()
    graph = ChimeraGraph(args.grid[0], args.grid[1], broken)
    if args.pattern == "clustered":
        if not args.instance:
            parser.error("--pattern clustered needs --instance for the cluster structure")
        instance = MqoInstance.load(args.instance)
        embedding = _clustered_for_instance(instance, qubo, graph)
    else:
        embedding = triad_embedding(qubo.num_vars, graph)

    usable = drop_broken_chains(embedding, graph)
    dropped = sorted(set(embedding.chains) - set(usable.chains))
    for v in dropped:
        print(f"warning: chain for variable {v} hits a broken qubit and was dropped",
              file=sys.stderr)
    if dropped:
        print(f"embedding infeasible: {len(dropped)} of {len(embedding.chains)} chains broken",
              file=sys.stderr)
        return EXIT_FIT

    pq = embed_qubo(qubo, embedding, graph, args.margin)
    save_embedding(args.out_embedding, embedding, graph)
    save_physical(args.out_physical, pq)
    print(f"wrote {args.out_embedding} and {args.out_physical}: "
          f"{embedding.num_chains} chains, {embedding.qubits_used()} qubits "
          f"on a {graph.rows}x{graph.cols} grid")
    return EXIT_OK


def _clustered_for_instance(instance: MqoInstance, qubo, graph: ChimeraGraph):
    """Clustered pattern for an instance, chains re-keyed to the QUBO variables."""
    clusters: dict[str, list[str]] = {}
    for q in instance.queries:
        clusters.setdefault(instance.cluster_of[q], []).append(q)
    names = sorted(clusters)
    counts = [sum(len(instance.plans_of[q]) for q in clusters[c]) for c in names]
    packed = clustered_embedding(counts, graph)
    var_of_plan = {p: i for i, p in enumerate(instance.plans)}
    rekeyed = {}
    slot = 0
    for c in names:
        for q in clusters[c]:
            for p in instance.plans_of[q]:
                rekeyed[var_of_plan[p]] = packed.chains[slot]
                slot += 1
    return type(packed)(rekeyed)


def _require(parser, condition: bool, message: str) -> None:
    if not condition:
        parser.error(message)


def cmd_solve(parser, args) -> int:
    if args.algo != "exact" and args.seed is None:
        parser.error(f"--algo {args.algo} is randomized and requires an explicit --seed")
    instance = MqoInstance.load(args.instance)
    result: dict = {"algo": args.algo, "seed": args.seed}
    record: SolverRunRecord | None = None
    chain_flags: tuple[int, ...] = ()

    if args.algo in ("climb", "ga"):
        if args.algo == "climb":
            record = hill_climbing(instance, args.deadline_ms, seed=args.seed,
                                   checkpoints=args.checkpoints)
        else:
            record = genetic_algorithm(instance, args.population, args.deadline_ms,
                                       seed=args.seed, checkpoints=args.checkpoints)
        selection = record.best_solution
        result["cost"] = record.best_value
    elif args.algo == "exact":
        if args.physical:
            _require(parser, bool(args.embedding), "--algo exact on --physical needs --embedding")
            pq = load_physical(args.physical)
            embedding, _grid = load_embedding(args.embedding)
            sample, energy_value = brute_force_physical(pq)
            assignment, chains = decode_physical(embedding, sample)
            chain_flags = chains.inconsistent
            mapping = _mapping_for(args, instance)
            selection = decode_logical(mapping, assignment[: len(mapping.plan_of_var)])
            result["energy"] = energy_value
            result["cost"] = cost(instance, selection)
        elif args.qubo:
            qubo, mapping = load_qubo(args.qubo)
            if mapping is None:
                mapping = logical_map(instance, args.margin)[1]
            bits, energy_value = brute_force_qubo(qubo)
            selection = decode_logical(mapping, bits)
            result["energy"] = energy_value
            result["cost"] = cost(instance, selection)
        else:
            selection, optimum = brute_force_mqo(instance)
            result["cost"] = optimum
    else:  # sa
        _require(parser, bool(args.qubo or args.physical),
                 "--algo sa needs --qubo (logical) or --physical with --embedding")
        if args.batches < 1 or args.runs < args.batches:
            parser.error("--runs must be at least --batches")
        params = AnnealParams(sweeps=args.sweeps, runs_per_batch=args.runs // args.batches,
                              batches=args.batches)
        mapping = _mapping_for(args, instance)
        if args.physical:
            _require(parser, bool(args.embedding), "--physical needs --embedding")
            pq = load_physical(args.physical)
            embedding, _grid = load_embedding(args.embedding)
            samples = simulated_annealing(pq, params, seed=args.seed)
            points, best_cost, selection, was_valid = anneal_cost_trace(
                instance, mapping, samples, params.runs_per_batch, embedding=embedding)
            _assignment, chains = decode_physical(embedding, min(samples, key=lambda s: s[1])[0])
            chain_flags = chains.inconsistent
        else:
            qubo, file_mapping = load_qubo(args.qubo)
            if file_mapping is not None:
                mapping = file_mapping
            samples = simulated_annealing(qubo, params, seed=args.seed)
            points, best_cost, selection, was_valid = anneal_cost_trace(
                instance, mapping, samples, params.runs_per_batch)
        record = SolverRunRecord(solver="sa", seed=args.seed, points=points,
                                 best_value=best_cost, best_solution=selection)
        result["cost"] = best_cost
        result["decoded_valid"] = was_valid

    report = validate_solution(instance, selection)
    result["selection"] = sorted(selection)
    result["valid"] = report.valid
    if not report.valid:
        result["violations"] = list(report.violations)
    if chain_flags:
        result["inconsistent_chains"] = list(chain_flags)

    print(f"selection: {', '.join(sorted(selection))}")
    print(f"cost: {result['cost']}")
    print(f"valid: {report.valid}")
    if chain_flags:
        print(f"inconsistent chains: {list(chain_flags)}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(result, indent=2, sort_keys=True) + "\n")
    if args.record and record is not None:
        with open(args.record, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(record.to_json_dict(), indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _mapping_for(args, instance: MqoInstance):
    if args.qubo:
        _qubo, mapping = load_qubo(args.qubo)
        if mapping is not None:
            return mapping
    return logical_map(instance, args.margin)[1]


def cmd_bench(parser, args) -> int:
    suite = BenchSuite.load(args.suite)
    result = run_suite(suite, out_dir=args.out, workers=args.workers,
                       figures=not args.no_figures)
    print(f"{len(result.curves)} curves written to {args.out}")
    for iid, solver, reason in result.skipped:
        print(f"skipped {iid} / {solver}: {reason}", file=sys.stderr)
    summary_path = f"{args.out}/summary.txt"
    try:
        with open(summary_path, "r", encoding="utf-8") as fh:
            print(fh.read(), end="")
    except FileNotFoundError:
        pass
    return EXIT_OK


def cmd_verify(parser, args) -> int:
    outcomes = oracle_equivalence_suite(
        instances=args.instances,
        max_queries=args.max_queries,
        max_plans=args.max_plans,
        max_density=args.max_density,
        seed=args.seed,
        margin=args.margin,
        break_conflict_weight=args.break_wm,
    )
    if not args.break_wm and args.chain_cases > 0:
        outcomes += chain_consistency_suite(cases=args.chain_cases, seed=args.seed,
                                            margin=args.margin)
    failed = False
    for outcome in outcomes:
        print(outcome)
        failed = failed or not outcome.ok
    if failed:
        print("verification FAILED")
        return EXIT_VERIFY
    print("verification passed")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except FitError as exc:
        cluster = f" (cluster {exc.cluster})" if exc.cluster is not None else ""
        print(f"error: embedding does not fit{cluster}: {exc}", file=sys.stderr)
        return EXIT_FIT
    except EmbeddingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceError, BudgetError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())
