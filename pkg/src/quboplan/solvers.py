"""Seed-driven solvers: a simulated-annealing sampler standing in for the
quantum annealer, plus the classical baselines (iterated hill climbing and a
genetic algorithm over per-query plan choices).

All solvers are deterministic for a fixed seed.  Progress over "time" is
accounted in deterministic units so that benchmark outputs are bit-identical
across machines and worker counts: annealing runs cost a nominal 0.376 ms
each (anneal plus read-out), classical solvers budget candidate evaluations
at a configurable nominal rate per millisecond.  Real wall-clock duration is
recorded on the run record for information only.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .logical import (
    LogicalMapping,
    Qubo,
    brute_force_qubo,
    decode_logical,
    energy_batch,
    repair_selection,
)
from .mqo import MqoInstance, brute_force_mqo, cost, validate_solution
from .physical import PhysicalQubo, brute_force_physical, decode_physical

#: Nominal duration of one annealing run (anneal + read-out), milliseconds.
ANNEAL_RUN_MS = 0.376

#: Nominal candidate-evaluation throughput of the classical baselines.
DEFAULT_EVALS_PER_MS = 1000.0

DEFAULT_CHECKPOINTS_MS = (1.0, 10.0, 100.0, 1000.0)


@dataclass
class AnnealParams:
    """Schedule and batching knobs of the annealing sampler.

    Temperatures default to the problem scale: the initial temperature is the
    largest absolute weight, the final temperature a small fraction of the
    weight-bound margin.
    """

    sweeps: int = 64
    runs_per_batch: int = 100
    batches: int = 10
    t_initial: float | None = None
    t_final: float | None = None
    schedule: str = "geometric"

    def __post_init__(self) -> None:
        if self.sweeps < 1:
            raise ValueError("need at least one sweep per run")
        if self.runs_per_batch * self.batches < 1:
            raise ValueError("need at least one run")
        if self.t_initial is not None and self.t_initial <= 0:
            raise ValueError("initial temperature must be positive")
        if self.t_final is not None and self.t_final <= 0:
            raise ValueError("final temperature must be positive")
        if self.t_initial is not None and self.t_final is not None and self.t_initial < self.t_final:
            raise ValueError("initial temperature must be >= final temperature")
        if self.schedule not in ("geometric", "linear"):
            raise ValueError(f"unknown schedule shape {self.schedule!r}")

    @property
    def total_runs(self) -> int:
        return self.runs_per_batch * self.batches


def _temperatures(params: AnnealParams, qubo: Qubo) -> np.ndarray:
    t0 = params.t_initial
    if t0 is None:
        weights = [abs(w) for w in qubo.linear.values()]
        weights += [abs(w) for w in qubo.quadratic.values()]
        t0 = max(weights, default=1.0) or 1.0
    t1 = params.t_final if params.t_final is not None else 2.5e-4
    t1 = min(t1, t0)
    if params.sweeps == 1:
        return np.array([t0])
    if params.schedule == "geometric":
        return t0 * (t1 / t0) ** (np.arange(params.sweeps) / (params.sweeps - 1))
    return np.linspace(t0, t1, params.sweeps)


def _anneal_batch(rng: np.random.Generator, lin, mat, temps, runs: int) -> np.ndarray:
    n = len(lin)
    states = rng.integers(0, 2, size=(runs, n)).astype(float)
    for temp in temps:
        uniforms = rng.random((n, runs))
        for i in range(n):
            field_i = lin[i] + states @ mat[i]
            delta = (1.0 - 2.0 * states[:, i]) * field_i
            # exp argument clipped at 0 so downhill moves always pass.
            accept = uniforms[i] < np.exp(np.minimum(0.0, -delta / temp))
            states[accept, i] = 1.0 - states[accept, i]
    return states


def simulated_annealing(problem, params: AnnealParams | None = None, seed: int = 0):
    """Metropolis single-bit annealing over independently seeded batches.

    Returns one ``(sample, energy)`` pair per run, batch by batch.  For a
    :class:`Qubo` the sample is a 0/1 array; for a :class:`PhysicalQubo` it is
    a ``{qubit: bit}`` dict over the used qubits.
    """
    params = params or AnnealParams()
    physical = isinstance(problem, PhysicalQubo)
    if physical:
        qubo, order = problem.as_qubo()
    else:
        qubo, order = problem, None
    lin, mat = qubo.dense()
    temps = _temperatures(params, qubo)

    results = []
    for child in np.random.SeedSequence(seed).spawn(params.batches):
        rng = np.random.default_rng(child)
        states = _anneal_batch(rng, lin, mat, temps, params.runs_per_batch)
        energies = energy_batch(qubo, states)
        for r in range(params.runs_per_batch):
            bits = states[r].astype(np.int8)
            if physical:
                sample = {q: int(b) for q, b in zip(order, bits)}
                results.append((sample, float(energies[r])))
            else:
                results.append((bits, float(energies[r])))
    return results


@dataclass(frozen=True)
class CurvePoint:
    time_ms: float
    iterations: int
    best_value: float
    valid: bool = True


@dataclass
class SolverRunRecord:
    """Best-so-far trace of one solver run.

    ``points`` carry nominal (deterministic) times; ``wall_ms`` is the real
    measured duration and is never serialized into benchmark outputs.
    """

    solver: str
    seed: int
    points: list[CurvePoint] = field(default_factory=list)
    best_value: float = math.inf
    best_solution: object = None
    wall_ms: float = 0.0

    def to_json_dict(self) -> dict:
        solution = self.best_solution
        if isinstance(solution, frozenset):
            solution = sorted(solution)
        elif isinstance(solution, np.ndarray):
            solution = [int(b) for b in solution]
        return {
            "solver": self.solver,
            "seed": self.seed,
            "best_value": self.best_value,
            "best_solution": solution,
            "points": [
                [p.time_ms, p.iterations, p.best_value, p.valid] for p in self.points
            ],
        }


class _CheckpointTracker:
    """Flush best-so-far values whenever the eval budget crosses a checkpoint."""

    def __init__(self, checkpoints_ms: Sequence[float], evals_per_ms: float):
        self.marks = sorted(float(t) for t in checkpoints_ms)
        self.rate = evals_per_ms
        self.next = 0
        self.points: list[CurvePoint] = []

    def threshold(self, t_ms: float) -> float:
        return t_ms * self.rate

    def advance(self, evals: float, best: float) -> None:
        while self.next < len(self.marks) and evals >= self.threshold(self.marks[self.next]):
            self.points.append(
                CurvePoint(self.marks[self.next], int(evals), best, True)
            )
            self.next += 1

    def finish(self, evals: float, best: float) -> None:
        while self.next < len(self.marks):
            self.points.append(CurvePoint(self.marks[self.next], int(evals), best, True))
            self.next += 1


def _instance_arrays(instance: MqoInstance):
    plans = instance.plans
    index = {p: i for i, p in enumerate(plans)}
    costs = np.array([instance.cost[p] for p in plans])
    savings = np.zeros((len(plans), len(plans)))
    for (a, b), v in instance.savings.items():
        savings[index[a], index[b]] = v
        savings[index[b], index[a]] = v
    offsets = []
    sizes = []
    pos = 0
    for q in instance.queries:
        offsets.append(pos)
        sizes.append(len(instance.plans_of[q]))
        pos += sizes[-1]
    return plans, costs, savings, np.array(offsets), np.array(sizes)


def _selection_cost(costs, savings, global_idx) -> float:
    base = float(costs[global_idx].sum())
    sub = savings[np.ix_(global_idx, global_idx)]
    return base - 0.5 * float(sub.sum())


def hill_climbing(
    instance: MqoInstance,
    deadline_ms: float,
    seed: int = 0,
    checkpoints: Sequence[float] | None = None,
    evals_per_ms: float = DEFAULT_EVALS_PER_MS,
    strategy: str = "steepest",
) -> SolverRunRecord:
    """Restarted local search over valid selections.

    Each restart draws a uniform random plan per query and descends by
    changing one query's plan at a time until no improving move exists;
    ``strategy`` picks steepest descent (default) or first improvement.
    The candidate-evaluation budget is ``deadline_ms * evals_per_ms``.
    """
    if deadline_ms <= 0:
        raise ValueError("deadline must be positive")
    if strategy not in ("steepest", "first"):
        raise ValueError(f"unknown strategy {strategy!r}")
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    plans, costs, savings, offsets, sizes = _instance_arrays(instance)
    nq = len(sizes)
    tracker = _CheckpointTracker(
        checkpoints if checkpoints is not None else _default_checkpoints(deadline_ms),
        evals_per_ms,
    )
    budget = deadline_ms * evals_per_ms
    moves_per_step = int((sizes - 1).sum())

    best_cost = math.inf
    best_choice = None
    evals = 0.0
    while evals < budget:
        choice = rng.integers(0, sizes)
        global_idx = offsets + choice
        current = _selection_cost(costs, savings, global_idx)
        evals += 1
        if current < best_cost:
            best_cost, best_choice = current, choice.copy()
        tracker.advance(evals, best_cost)
        while evals < budget:
            selected = np.zeros(len(plans))
            selected[global_idx] = 1.0
            gain = costs - savings @ selected
            deltas = []
            for q in range(nq):
                lo = offsets[q]
                here = gain[global_idx[q]]
                for j in range(sizes[q]):
                    if lo + j != global_idx[q]:
                        deltas.append((gain[lo + j] - here, q, j))
            if not deltas:
                break
            if strategy == "steepest":
                evals += moves_per_step
                delta, q, j = min(deltas)
            else:
                delta, q, j = deltas[-1]
                for pos, cand in enumerate(deltas):
                    if cand[0] < -1e-12:
                        delta, q, j = cand
                        evals += pos + 1
                        break
                else:
                    evals += len(deltas)
            if delta >= -1e-12:
                tracker.advance(evals, best_cost)
                break
            choice[q] = j
            global_idx[q] = offsets[q] + j
            current += float(delta)
            if current < best_cost:
                best_cost, best_choice = current, choice.copy()
            tracker.advance(evals, best_cost)
    tracker.finish(evals, best_cost)

    selection = frozenset(plans[offsets[q] + best_choice[q]] for q in range(nq))
    return SolverRunRecord(
        solver="climb",
        seed=seed,
        points=tracker.points,
        best_value=best_cost,
        best_solution=selection,
        wall_ms=(time.perf_counter() - start) * 1e3,
    )


def _default_checkpoints(deadline_ms: float) -> tuple[float, ...]:
    marks = tuple(t for t in DEFAULT_CHECKPOINTS_MS if t <= deadline_ms)
    return marks or (deadline_ms,)


def genetic_algorithm(
    instance: MqoInstance,
    population: int,
    deadline_ms: float,
    seed: int = 0,
    checkpoints: Sequence[float] | None = None,
    crossover_rate: float = 0.35,
    mutation_rate: float = 1.0 / 12.0,
    evals_per_ms: float = DEFAULT_EVALS_PER_MS,
) -> SolverRunRecord:
    """Elitist genetic algorithm over per-query plan choices.

    Chromosomes are vectors of plan indices, one gene per query, so every
    individual decodes to a valid selection.  Parents pair up at random;
    each pair crosses over at a single point with probability
    ``crossover_rate``; every gene of an offspring mutates (uniform re-draw)
    with probability ``mutation_rate``.  Parents and offspring then compete
    and the best ``population`` individuals survive.
    """
    if population < 2:
        raise ValueError(f"population must be at least 2, got {population}")
    if deadline_ms <= 0:
        raise ValueError("deadline must be positive")
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    plans, costs, savings, offsets, sizes = _instance_arrays(instance)
    nq = len(sizes)
    tracker = _CheckpointTracker(
        checkpoints if checkpoints is not None else _default_checkpoints(deadline_ms),
        evals_per_ms,
    )
    budget = deadline_ms * evals_per_ms

    def evaluate(pop: np.ndarray) -> np.ndarray:
        idx = offsets[None, :] + pop
        base = costs[idx].sum(axis=1)
        onehot = np.zeros((len(pop), len(plans)))
        np.put_along_axis(onehot, idx, 1.0, axis=1)
        shared = 0.5 * np.einsum("ri,ri->r", onehot @ savings, onehot)
        return base - shared

    pop = rng.integers(0, sizes, size=(population, nq))
    fitness = evaluate(pop)
    evals = float(population)
    order = np.argsort(fitness, kind="stable")
    pop, fitness = pop[order], fitness[order]
    best_cost = float(fitness[0])
    best_chrom = pop[0].copy()
    tracker.advance(evals, best_cost)

    while evals < budget:
        perm = rng.permutation(population)
        children = pop[perm].copy()
        for a in range(0, population - 1, 2):
            if rng.random() < crossover_rate and nq >= 2:
                point = int(rng.integers(1, nq))
                left = children[a, :point].copy()
                children[a, :point] = children[a + 1, :point]
                children[a + 1, :point] = left
        mutate = rng.random(size=(population, nq)) < mutation_rate
        for q in range(nq):
            redraw = rng.integers(0, sizes[q], size=population)
            children[:, q] = np.where(mutate[:, q], redraw, children[:, q])
        child_fit = evaluate(children)
        evals += population
        merged = np.vstack([pop, children])
        merged_fit = np.concatenate([fitness, child_fit])
        order = np.argsort(merged_fit, kind="stable")[:population]
        pop, fitness = merged[order], merged_fit[order]
        if float(fitness[0]) < best_cost:
            best_cost = float(fitness[0])
            best_chrom = pop[0].copy()
        tracker.advance(evals, best_cost)
    tracker.finish(evals, best_cost)

    selection = frozenset(plans[offsets[q] + best_chrom[q]] for q in range(nq))
    return SolverRunRecord(
        solver=f"ga-{population}",
        seed=seed,
        points=tracker.points,
        best_value=best_cost,
        best_solution=selection,
        wall_ms=(time.perf_counter() - start) * 1e3,
    )


def anneal_cost_trace(
    instance: MqoInstance,
    mapping: LogicalMapping,
    samples,
    runs_per_batch: int,
    embedding=None,
):
    """Per-batch best-cost trace for a stream of annealing samples.

    After each batch the lowest-energy sample seen so far is decoded to a
    selection (chain majority vote first when ``embedding`` is given) and
    repaired if invalid; the trace reports the best repaired cost so far with
    nominal per-run timing.  The validity flag describes the pre-repair state
    of the solution currently holding the best cost.

    Returns ``(points, best_cost, best_selection, best_was_valid)``.
    """
    points: list[CurvePoint] = []
    best_energy = math.inf
    best_sample = None
    best_cost = math.inf
    best_selection = None
    best_was_valid = True
    batches = len(samples) // runs_per_batch
    for b in range(batches):
        for sample, e in samples[b * runs_per_batch : (b + 1) * runs_per_batch]:
            if e < best_energy:
                best_energy, best_sample = e, sample
        if embedding is not None:
            assignment, _chains = decode_physical(embedding, best_sample)
        else:
            assignment = best_sample
        selection = decode_logical(mapping, assignment)
        report = validate_solution(instance, selection)
        if not report.valid:
            selection = repair_selection(instance, selection)
        value = cost(instance, selection)
        if value < best_cost:
            best_cost = value
            best_selection = selection
            best_was_valid = report.valid
        runs = (b + 1) * runs_per_batch
        points.append(CurvePoint(runs * ANNEAL_RUN_MS, runs, best_cost, best_was_valid))
    return points, best_cost, best_selection, best_was_valid


def solve_exact(problem, budget: int | None = None):
    """Route a problem to its exhaustive solver.

    Returns ``(selection, cost)`` for instances, ``(assignment, energy)`` for
    QUBOs, and ``(sample, energy)`` for physical QUBOs.
    """
    if isinstance(problem, MqoInstance):
        return brute_force_mqo(problem) if budget is None else brute_force_mqo(problem, budget)
    if isinstance(problem, Qubo):
        return brute_force_qubo(problem) if budget is None else brute_force_qubo(problem, budget)
    if isinstance(problem, PhysicalQubo):
        return brute_force_physical(problem) if budget is None else brute_force_physical(problem, budget)
    raise TypeError(f"cannot solve object of type {type(problem).__name__}")
