"""Benchmark harness: seeded instance families, cost-vs-time curves, CSV
and figure emission.

Annealing curves are sampled once per batch of runs; classical solvers are
sampled at a fixed checkpoint schedule.  Every curve is scaled against a
reference cost - the exhaustive optimum when the instance fits the
enumeration budget, otherwise the best cost any solver found (the reference
kind is recorded in the metadata).  All outputs are bit-identical for a
fixed master seed, regardless of worker count.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .chimera import ChimeraGraph, FitError, triad_embedding
from .logical import logical_map
from .mqo import BudgetError, MqoInstance, brute_force_mqo, generate_instance
from .physical import EmbeddingError, embed_qubo
from .solvers import (
    AnnealParams,
    CurvePoint,
    anneal_cost_trace,
    genetic_algorithm,
    hill_climbing,
    simulated_annealing,
)

CURVES_HEADER = ("instance_id", "solver", "seed", "time_ms", "runs", "best_cost", "scaled_cost", "valid")

SOLVER_KINDS = ("sa", "sa-phys", "climb", "ga", "exact")


@dataclass(frozen=True)
class FamilySpec:
    """One instance family: a size, a count and generation parameters."""

    name: str
    queries: int
    plans_per_query: int
    instances: int
    savings_density: float = 0.1
    cost_range: tuple[float, float] = (10.0, 20.0)
    savings_range: tuple[float, float] = (1.0, 5.0)


@dataclass(frozen=True)
class SolverSpec:
    name: str
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in SOLVER_KINDS:
            raise ValueError(f"unknown solver kind {self.kind!r}, expected one of {SOLVER_KINDS}")


@dataclass
class BenchSuite:
    families: list[FamilySpec]
    solvers: list[SolverSpec]
    checkpoints_ms: tuple[float, ...] = (1.0, 10.0, 100.0, 1000.0)
    master_seed: int = 0
    grid: tuple[int, int] = (12, 12)
    reference_budget: int = 1 << 20
    margin: float = 0.25

    def __post_init__(self) -> None:
        if not self.families:
            raise ValueError("suite needs at least one family")
        if not self.solvers:
            raise ValueError("suite needs at least one solver")
        names = [s.name for s in self.solvers]
        if len(set(names)) != len(names):
            raise ValueError("solver names must be unique")
        marks = tuple(float(t) for t in self.checkpoints_ms)
        if not marks or any(b <= a for a, b in zip(marks, marks[1:])):
            raise ValueError("checkpoints must be strictly increasing")
        self.checkpoints_ms = marks

    def to_json_dict(self) -> dict:
        return {
            "families": [
                {
                    "name": f.name,
                    "queries": f.queries,
                    "plans_per_query": f.plans_per_query,
                    "instances": f.instances,
                    "savings_density": f.savings_density,
                    "cost_range": list(f.cost_range),
                    "savings_range": list(f.savings_range),
                }
                for f in self.families
            ],
            "solvers": [
                {"name": s.name, "kind": s.kind, "params": s.params} for s in self.solvers
            ],
            "checkpoints_ms": list(self.checkpoints_ms),
            "master_seed": self.master_seed,
            "grid": list(self.grid),
            "reference_budget": self.reference_budget,
            "margin": self.margin,
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "BenchSuite":
        families = [
            FamilySpec(
                name=f["name"],
                queries=int(f["queries"]),
                plans_per_query=int(f["plans_per_query"]),
                instances=int(f["instances"]),
                savings_density=float(f.get("savings_density", 0.1)),
                cost_range=tuple(f.get("cost_range", (10.0, 20.0))),
                savings_range=tuple(f.get("savings_range", (1.0, 5.0))),
            )
            for f in doc["families"]
        ]
        solvers = [
            SolverSpec(s["name"], s["kind"], dict(s.get("params", {}))) for s in doc["solvers"]
        ]
        return cls(
            families=families,
            solvers=solvers,
            checkpoints_ms=tuple(doc.get("checkpoints_ms", (1.0, 10.0, 100.0, 1000.0))),
            master_seed=int(doc.get("master_seed", 0)),
            grid=tuple(doc.get("grid", (12, 12))),
            reference_budget=int(doc.get("reference_budget", 1 << 20)),
            margin=float(doc.get("margin", 0.25)),
        )

    @classmethod
    def load(cls, path) -> "BenchSuite":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class CurveSample:
    time_ms: float
    runs: int
    best_cost: float
    scaled_cost: float
    valid: bool


@dataclass(frozen=True)
class TimeCostCurve:
    instance_id: str
    solver: str
    seed: int
    reference_cost: float
    reference_kind: str
    points: tuple[CurveSample, ...]


@dataclass(frozen=True)
class CurveRow:
    instance_id: str
    solver: str
    seed: int
    time_ms: float
    runs: int
    best_cost: float
    scaled_cost: float
    valid: bool


@dataclass
class BenchResult:
    curves: list[TimeCostCurve]
    skipped: list[tuple[str, str, str]]
    references: dict[str, tuple[str, float]]
    master_seed: int


def default_desk_suite(instances_per_family: int = 20, master_seed: int = 0) -> BenchSuite:
    """Desk-scale suite: family sizes small enough for the exhaustive
    reference and for complete-graph embeddings on the default 12x12 grid."""
    families = [
        FamilySpec(f"desk-{q}x{p}", q, p, instances_per_family)
        for q, p in ((20, 2), (12, 3), (9, 4), (7, 5))
    ]
    solvers = [
        SolverSpec("sa", "sa"),
        SolverSpec("climb", "climb"),
        SolverSpec("ga-50", "ga", {"population": 50}),
        SolverSpec("ga-200", "ga", {"population": 200}),
        SolverSpec("exact", "exact"),
    ]
    return BenchSuite(families=families, solvers=solvers, master_seed=master_seed)


def family_of(instance_id: str) -> str:
    return instance_id.rsplit("-i", 1)[0]


def _cell_seed(master: int, fi: int, k: int, si: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(fi, k, si)).generate_state(1)[0])


def _instance_seed(master: int, fi: int, k: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(fi, k)).generate_state(1)[0])


def _solve_cell(instance: MqoInstance, spec: SolverSpec, seed: int,
                checkpoints: Sequence[float], grid: tuple[int, int],
                margin: float, reference_budget: int):
    """Run one (instance, solver) cell; returns ((points, best), reason)."""
    deadline = max(checkpoints)
    try:
        if spec.kind == "exact":
            _sel, opt = brute_force_mqo(instance, reference_budget)
            points = [CurvePoint(t, 1, opt, True) for t in checkpoints]
            return (points, opt), None
        if spec.kind == "climb":
            rec = hill_climbing(instance, deadline, seed=seed, checkpoints=checkpoints,
                                strategy=spec.params.get("strategy", "steepest"))
            return (rec.points, rec.best_value), None
        if spec.kind == "ga":
            rec = genetic_algorithm(instance, int(spec.params.get("population", 50)),
                                    deadline, seed=seed, checkpoints=checkpoints)
            return (rec.points, rec.best_value), None

        params = AnnealParams(
            sweeps=int(spec.params.get("sweeps", 64)),
            runs_per_batch=int(spec.params.get("runs_per_batch", 100)),
            batches=int(spec.params.get("batches", 10)),
        )
        qubo, mapping = logical_map(instance, margin)
        if spec.kind == "sa":
            samples = simulated_annealing(qubo, params, seed=seed)
            points, best, _sel, _valid = anneal_cost_trace(
                instance, mapping, samples, params.runs_per_batch
            )
            return (points, best), None
        # sa-phys: complete-graph embedding of the full logical QUBO.
        graph = ChimeraGraph(*grid)
        embedding = triad_embedding(qubo.num_vars, graph)
        pq = embed_qubo(qubo, embedding, graph, margin)
        samples = simulated_annealing(pq, params, seed=seed)
        points, best, _sel, _valid = anneal_cost_trace(
            instance, mapping, samples, params.runs_per_batch, embedding=embedding
        )
        return (points, best), None
    except (FitError, EmbeddingError, BudgetError) as exc:
        return None, str(exc)


def _solve_cell_packed(task):
    return _solve_cell(*task)


def run_suite(
    suite: BenchSuite,
    out_dir: str | None = None,
    workers: int = 1,
    figures: bool = True,
) -> BenchResult:
    """Execute every (instance, solver) cell and emit CSV/figure outputs.

    Cells whose embedding does not fit (or whose oracle budget is exceeded)
    are skipped with a recorded reason.  With ``out_dir`` set, writes
    ``curves.csv``, ``summary.csv``, ``summary.txt``, ``metadata.json`` and
    one figure per family.
    """
    instances: list[tuple[str, MqoInstance]] = []
    for fi, fam in enumerate(suite.families):
        for k in range(fam.instances):
            inst = generate_instance(
                fam.queries,
                fam.plans_per_query,
                fam.savings_density,
                cost_range=fam.cost_range,
                savings_range=fam.savings_range,
                seed=_instance_seed(suite.master_seed, fi, k),
            )
            instances.append((f"{fam.name}-i{k:03d}", inst))

    tasks = []
    keys = []
    idx = 0
    for fi, fam in enumerate(suite.families):
        for k in range(fam.instances):
            iid, inst = instances[idx]
            idx += 1
            for si, spec in enumerate(suite.solvers):
                seed = _cell_seed(suite.master_seed, fi, k, si)
                keys.append((iid, spec.name, seed))
                tasks.append(
                    (inst, spec, seed, suite.checkpoints_ms, suite.grid,
                     suite.margin, suite.reference_budget)
                )

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_solve_cell_packed, tasks))
    else:
        outcomes = [_solve_cell_packed(t) for t in tasks]

    # Reference cost per instance: exhaustive optimum when affordable,
    # otherwise the best value any solver reached.
    best_found: dict[str, float] = {}
    for (iid, _s, _seed), (cell, _reason) in zip(keys, outcomes):
        if cell is not None:
            best_found[iid] = min(best_found.get(iid, math.inf), cell[1])
    references: dict[str, tuple[str, float]] = {}
    for iid, inst in instances:
        try:
            _sel, opt = brute_force_mqo(inst, suite.reference_budget)
            references[iid] = ("optimum", opt)
        except BudgetError:
            references[iid] = ("best-found", best_found.get(iid, math.nan))

    curves: list[TimeCostCurve] = []
    skipped: list[tuple[str, str, str]] = []
    for (iid, sname, seed), (cell, reason) in zip(keys, outcomes):
        if cell is None:
            skipped.append((iid, sname, reason))
            continue
        kind, ref = references[iid]
        samples = tuple(
            CurveSample(
                time_ms=float(p.time_ms),
                runs=int(p.iterations),
                best_cost=float(p.best_value),
                scaled_cost=(float(p.best_value) / ref) if ref > 0 else math.nan,
                valid=p.valid,
            )
            for p in cell[0]
        )
        curves.append(TimeCostCurve(iid, sname, seed, ref, kind, samples))

    result = BenchResult(curves=curves, skipped=skipped, references=references,
                         master_seed=suite.master_seed)
    if out_dir is not None:
        _write_outputs(suite, result, out_dir, figures)
    return result


def curve_rows(curves: Sequence[TimeCostCurve]) -> list[CurveRow]:
    rows = []
    for c in sorted(curves, key=lambda c: (c.instance_id, c.solver)):
        for p in c.points:
            rows.append(
                CurveRow(c.instance_id, c.solver, c.seed, p.time_ms, p.runs,
                         p.best_cost, p.scaled_cost, p.valid)
            )
    return rows


def write_curves_csv(path, curves: Sequence[TimeCostCurve]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVES_HEADER)
        for r in curve_rows(curves):
            writer.writerow(
                [r.instance_id, r.solver, r.seed, repr(float(r.time_ms)), r.runs,
                 repr(float(r.best_cost)), repr(float(r.scaled_cost)),
                 "true" if r.valid else "false"]
            )


def read_curves_csv(path) -> list[CurveRow]:
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CURVES_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        for rec in reader:
            rows.append(
                CurveRow(rec[0], rec[1], int(rec[2]), float(rec[3]), int(rec[4]),
                         float(rec[5]), float(rec[6]), rec[7] == "true")
            )
    return rows


def lower_median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    if not ordered:
        raise ValueError("median of empty sequence")
    return ordered[(len(ordered) - 1) // 2]


@dataclass(frozen=True)
class SummaryRow:
    family: str
    solver: str
    curves: int
    time_to_best_min: float
    time_to_best_median: float
    time_to_best_max: float
    mean_final_scaled: float
    mean_improvement: float


def summarize(
    curves: Sequence[TimeCostCurve], families: Sequence[str] | None = None
) -> list[SummaryRow]:
    """Aggregate per (family, solver): time-to-best spread, final scaled cost,
    and the mean relative improvement from the first to the last sample."""
    if not curves:
        raise ValueError("nothing to summarize")
    groups: dict[tuple[str, str], list[TimeCostCurve]] = {}
    for c in curves:
        groups.setdefault((family_of(c.instance_id), c.solver), []).append(c)
    if families is not None:
        seen = {family_of(c.instance_id) for c in curves}
        for fam in families:
            if fam not in seen:
                warnings.warn(f"family {fam!r} produced no curves; omitted from summary")
    rows = []
    for (fam, solver) in sorted(groups):
        members = groups[(fam, solver)]
        t_best = []
        final_scaled = []
        improvements = []
        for c in members:
            final = c.points[-1].best_cost
            t_best.append(min(p.time_ms for p in c.points if p.best_cost <= final + 1e-9))
            final_scaled.append(c.points[-1].scaled_cost)
            first = c.points[0].best_cost
            if abs(first) > 1e-12:
                improvements.append((first - final) / abs(first))
            else:
                improvements.append(0.0)
        rows.append(
            SummaryRow(
                family=fam,
                solver=solver,
                curves=len(members),
                time_to_best_min=min(t_best),
                time_to_best_median=lower_median(t_best),
                time_to_best_max=max(t_best),
                mean_final_scaled=float(np.mean(final_scaled)),
                mean_improvement=float(np.mean(improvements)),
            )
        )
    return rows


def write_summary_csv(path, rows: Sequence[SummaryRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["family", "solver", "curves", "time_to_best_min_ms", "time_to_best_median_ms",
             "time_to_best_max_ms", "mean_final_scaled", "mean_improvement"]
        )
        for r in rows:
            writer.writerow(
                [r.family, r.solver, r.curves, repr(r.time_to_best_min),
                 repr(r.time_to_best_median), repr(r.time_to_best_max),
                 repr(r.mean_final_scaled), repr(r.mean_improvement)]
            )


def format_summary_table(rows: Sequence[SummaryRow]) -> str:
    header = ("family", "solver", "n", "t_best min/med/max (ms)", "final scaled", "improvement")
    lines = []
    body = []
    for r in rows:
        body.append(
            (r.family, r.solver, str(r.curves),
             f"{r.time_to_best_min:g} / {r.time_to_best_median:g} / {r.time_to_best_max:g}",
             f"{r.mean_final_scaled:.4f}", f"{r.mean_improvement:.2%}")
        )
    widths = [max(len(h), *(len(row[i]) for row in body)) if body else len(h)
              for i, h in enumerate(header)]
    lines.append("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for row in body:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)))
    return "\n".join(lines) + "\n"


def _write_outputs(suite: BenchSuite, result: BenchResult, out_dir: str, figures: bool) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_curves_csv(os.path.join(out_dir, "curves.csv"), result.curves)
    if result.curves:
        rows = summarize(result.curves, families=[f.name for f in suite.families])
        write_summary_csv(os.path.join(out_dir, "summary.csv"), rows)
        with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
            fh.write(format_summary_table(rows))
    meta = {
        "master_seed": result.master_seed,
        "references": {
            iid: {"kind": kind, "value": value}
            for iid, (kind, value) in sorted(result.references.items())
        },
        "skipped": [
            {"instance_id": iid, "solver": solver, "reason": reason}
            for iid, solver, reason in result.skipped
        ],
    }
    with open(os.path.join(out_dir, "metadata.json"), "w", encoding="utf-8") as fh:
        fh.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    if figures and result.curves:
        from . import plots

        for fam in sorted({family_of(c.instance_id) for c in result.curves}):
            fam_curves = [c for c in result.curves if family_of(c.instance_id) == fam]
            plots.render_family_figure(fam, fam_curves, os.path.join(out_dir, f"fig_{fam}.png"))
