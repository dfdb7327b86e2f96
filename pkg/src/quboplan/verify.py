"""Randomized verification suites for the end-to-end correctness guarantees.

Two suites are provided: the oracle-equivalence suite checks over seeded
random instances that the exhaustive QUBO optimum decodes to a valid
selection matching the exhaustive plan-selection optimum; the chain
consistency suite checks over seeded random embeddings that every ground
state of the physical energy assigns each chain uniformly and preserves the
logical optimum.  A negative-control switch lowers the conflict weight to
the coverage weight, which is expected to break validity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chimera import ChimeraGraph, Embedding
from .chimera import _block_chains
from .logical import (
    LogicalMapping,
    Qubo,
    brute_force_qubo,
    decode_logical,
    energy,
    logical_map,
)
from .mqo import MqoInstance, brute_force_mqo, cost, generate_instance, validate_solution
from .physical import decode_physical, embed_qubo, physical_minima

TOLERANCE = 1e-9


@dataclass(frozen=True)
class CheckOutcome:
    label: str
    passed: int
    failed: int

    @property
    def ok(self) -> bool:
        return self.failed == 0

    def __str__(self) -> str:
        total = self.passed + self.failed
        return f"{self.label}: {self.passed}/{total} passed"


def with_conflict_weight(instance: MqoInstance, qubo: Qubo, mapping: LogicalMapping,
                         new_weight: float) -> Qubo:
    """Rebuild the QUBO with a different weight on every same-query pair."""
    var = mapping.var_of_plan
    quadratic = dict(qubo.quadratic)
    for q in instance.queries:
        qplans = instance.plans_of[q]
        for i, a in enumerate(qplans):
            for b in qplans[i + 1 :]:
                u, v = sorted((var[a], var[b]))
                quadratic[(u, v)] = new_weight
    return Qubo(qubo.num_vars, dict(qubo.linear), quadratic)


def random_small_instance(rng: np.random.Generator, max_queries: int = 6,
                          max_plans: int = 3, max_density: float = 0.4) -> MqoInstance:
    return generate_instance(
        n_queries=int(rng.integers(1, max_queries + 1)),
        plans_per_query=int(rng.integers(1, max_plans + 1)),
        savings_density=float(rng.uniform(0.0, max_density)),
        cost_range=(1.0, 10.0),
        savings_range=(1.0, 10.0),
        seed=int(rng.integers(0, 2**31)),
    )


def oracle_equivalence_suite(
    instances: int = 200,
    max_queries: int = 6,
    max_plans: int = 3,
    max_density: float = 0.4,
    seed: int = 11,
    margin: float = 0.25,
    break_conflict_weight: bool = False,
) -> list[CheckOutcome]:
    """Compare decoded QUBO optima against the exhaustive plan-selection oracle.

    Checks, per instance: the optimum decodes to a valid selection, and its
    cost equals the enumeration optimum within ``TOLERANCE``.
    """
    rng = np.random.default_rng(seed)
    valid_ok = equiv_ok = 0
    for _ in range(instances):
        inst = random_small_instance(rng, max_queries, max_plans, max_density)
        qubo, mapping = logical_map(inst, margin)
        if break_conflict_weight:
            qubo = with_conflict_weight(inst, qubo, mapping, mapping.coverage_weight)
        bits, _energy = brute_force_qubo(qubo)
        selection = decode_logical(mapping, bits)
        report = validate_solution(inst, selection)
        if report.valid:
            valid_ok += 1
            _sel, optimum = brute_force_mqo(inst)
            if abs(cost(inst, selection) - optimum) <= TOLERANCE:
                equiv_ok += 1
    return [
        CheckOutcome("decoded validity", valid_ok, instances - valid_ok),
        CheckOutcome("optimum equivalence", equiv_ok, instances - equiv_ok),
    ]


def _ladder_embedding(graph: ChimeraGraph) -> Embedding:
    # Three pairwise-coupled chains of length 4 on a 4x4 cell block.
    q = graph.qubit
    return Embedding(
        {
            0: (q(0, 0, 0, 0), q(1, 0, 0, 0), q(2, 0, 0, 0), q(3, 0, 0, 0)),
            1: (q(0, 0, 1, 0), q(0, 1, 1, 0), q(0, 2, 1, 0), q(0, 3, 1, 0)),
            2: (q(1, 0, 1, 0), q(1, 1, 1, 0), q(1, 1, 0, 0), q(0, 1, 0, 0)),
        }
    )


def _random_dense_qubo(rng: np.random.Generator, n: int, scale: float = 5.0) -> Qubo:
    linear = {i: float(rng.uniform(-scale, scale)) for i in range(n)}
    quadratic = {}
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < 0.8:
                quadratic[(u, v)] = float(rng.uniform(-scale, scale))
    return Qubo(n, linear, quadratic)


def chain_consistency_suite(
    cases: int = 100, seed: int = 7, margin: float = 0.25
) -> list[CheckOutcome]:
    """Check every physical ground state for uniform chains and preserved optima.

    Scenarios rotate between chain lengths two (one-cell block pattern),
    three (two-cell-deep block pattern) and four (a hand-laid three-variable
    pattern), all within 24 physical qubits.
    """
    rng = np.random.default_rng(seed)
    graph = ChimeraGraph(4, 4)
    consistent_ok = preserved_ok = 0
    for case in range(cases):
        shape = case % 3
        if shape == 0:
            n = int(rng.integers(2, 5))
            embedding = Embedding(_block_chains(n, graph, (0, 0)))
        elif shape == 1:
            # 21 physical qubits at most, so every ground state can be collected.
            n = int(rng.integers(6, 8))
            embedding = Embedding(_block_chains(n, graph, (0, 0)))
        else:
            n = 3
            embedding = _ladder_embedding(graph)
        qubo = _random_dense_qubo(rng, n)
        pq = embed_qubo(qubo, embedding, graph, margin)
        ground_states, _phys_min = physical_minima(pq, atol=1e-12)
        _bits, logical_min = brute_force_qubo(qubo)
        all_consistent = True
        all_preserved = True
        for state in ground_states:
            assignment, chains = decode_physical(embedding, state)
            if not chains.consistent:
                all_consistent = False
            if abs(energy(qubo, assignment) - logical_min) > TOLERANCE:
                all_preserved = False
        if all_consistent:
            consistent_ok += 1
        if all_preserved:
            preserved_ok += 1
    return [
        CheckOutcome("chain consistency at optimum", consistent_ok, cases - consistent_ok),
        CheckOutcome("optimum energy preserved", preserved_ok, cases - preserved_ok),
    ]
