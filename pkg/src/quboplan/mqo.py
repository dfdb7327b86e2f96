"""Problem model for joint plan selection across a batch of queries.

An instance holds queries, alternative execution plans with nonnegative
costs, and strictly positive pairwise savings between plans of different
queries (shared intermediate results).  A valid solution picks exactly one
plan per query; its cost is the sum of the selected plan costs minus the
savings of every selected pair.

Queries and plans are normalized to sorted-by-id order at construction so
that variable numbering and serialization are reproducible.

Plans built from shareable sub-tasks fit this pairwise model without any
special support: introduce one extra query per sub-task, give its plan the
sub-task's cost, and link it to every plan that can reuse the sub-task with
a saving of that same cost.  No automatic expansion is performed.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

PlanSelection = frozenset[str]

#: Largest number of plan combinations the exhaustive solver enumerates.
DEFAULT_ENUMERATION_BUDGET = 10_000_000

_BLOCK = 1 << 18


class InstanceError(ValueError):
    """The instance violates a structural invariant."""


class UnknownPlanError(ValueError):
    """A selection refers to a plan id the instance does not define."""


class BudgetError(RuntimeError):
    """An exhaustive enumeration would exceed its configured budget."""


def _pair(a: str, b: str) -> tuple[str, str]:
    if a == b:
        raise InstanceError(f"savings pair must join two distinct plans, got {a!r} twice")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class MqoInstance:
    """Immutable plan-selection problem instance.

    Attributes:
        queries: query ids, sorted.
        plans_of: query id -> plan ids of that query, sorted.
        cost: plan id -> execution cost (>= 0).
        savings: sorted plan-id pair -> saving (> 0), plans of distinct queries.
        cluster_of: query id -> cluster id (defaults to one cluster per query).
    """

    queries: tuple[str, ...]
    plans_of: dict[str, tuple[str, ...]]
    cost: dict[str, float]
    savings: dict[tuple[str, str], float]
    cluster_of: dict[str, str]

    @classmethod
    def of(
        cls,
        plan_costs: Mapping[str, Mapping[str, float]],
        savings: Mapping[tuple[str, str], float] | None = None,
        clusters: Mapping[str, str] | None = None,
    ) -> "MqoInstance":
        """Build an instance from ``{query: {plan: cost}}`` plus savings pairs."""
        queries = tuple(sorted(plan_costs))
        plans_of = {q: tuple(sorted(plan_costs[q])) for q in queries}
        cost = {p: float(plan_costs[q][p]) for q in queries for p in plans_of[q]}
        sav = {_pair(a, b): float(v) for (a, b), v in (savings or {}).items()}
        cluster_of = dict(clusters) if clusters else {q: q for q in queries}
        return cls(queries, plans_of, cost, sav, cluster_of)

    def __post_init__(self) -> None:
        seen: dict[str, str] = {}
        for q in self.queries:
            plans = self.plans_of.get(q, ())
            if not plans:
                raise InstanceError(f"query {q!r} has no plans")
            for p in plans:
                if p in seen:
                    raise InstanceError(f"plan {p!r} appears under {seen[p]!r} and {q!r}")
                seen[p] = q
        for p, c in self.cost.items():
            if p not in seen:
                raise InstanceError(f"cost given for unknown plan {p!r}")
            if not math.isfinite(c) or c < 0:
                raise InstanceError(f"plan {p!r} has invalid cost {c}")
        for p in seen:
            if p not in self.cost:
                raise InstanceError(f"plan {p!r} has no cost")
        for (a, b), v in self.savings.items():
            if a not in seen or b not in seen:
                missing = a if a not in seen else b
                raise InstanceError(f"savings refer to unknown plan {missing!r}")
            if seen[a] == seen[b]:
                raise InstanceError(
                    f"savings pair ({a!r}, {b!r}) joins two plans of query {seen[a]!r}"
                )
            if not math.isfinite(v) or v <= 0:
                raise InstanceError(f"savings for ({a!r}, {b!r}) must be > 0, got {v}")
            if (a, b) != _pair(a, b):
                raise InstanceError(f"savings key ({a!r}, {b!r}) is not sorted")
        if set(self.cluster_of) != set(self.queries):
            raise InstanceError("cluster_of must cover exactly the query set")

    @cached_property
    def query_of(self) -> dict[str, str]:
        return {p: q for q in self.queries for p in self.plans_of[q]}

    @cached_property
    def plans(self) -> tuple[str, ...]:
        """All plan ids in canonical (query, plan) order."""
        return tuple(p for q in self.queries for p in self.plans_of[q])

    def combination_count(self) -> int:
        return math.prod(len(self.plans_of[q]) for q in self.queries)

    # -- canonical serialization ------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "queries": [
                {"id": q, "plans": [{"id": p, "cost": self.cost[p]} for p in self.plans_of[q]]}
                for q in self.queries
            ],
            "savings": [
                {"a": a, "b": b, "value": v} for (a, b), v in sorted(self.savings.items())
            ],
            "clusters": {q: self.cluster_of[q] for q in self.queries},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def from_json_dict(cls, doc: Mapping) -> "MqoInstance":
        plan_costs = {
            entry["id"]: {p["id"]: p["cost"] for p in entry["plans"]}
            for entry in doc["queries"]
        }
        savings = {(e["a"], e["b"]): e["value"] for e in doc.get("savings", [])}
        return cls.of(plan_costs, savings, doc.get("clusters"))

    @classmethod
    def load(cls, path) -> "MqoInstance":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class ValidationReport:
    """Per-query selection counts plus the overall validity flag."""

    valid: bool
    counts: dict[str, int]
    violations: tuple[str, ...]


def _check_plans_known(instance: MqoInstance, selection: Iterable[str]) -> frozenset[str]:
    sel = frozenset(selection)
    for p in sorted(sel):
        if p not in instance.cost:
            raise UnknownPlanError(f"unknown plan id {p!r}")
    return sel


def cost(instance: MqoInstance, selection: Iterable[str]) -> float:
    """Total cost of a plan set: selected costs minus savings of selected pairs.

    Does not require the selection to be valid.
    """
    sel = _check_plans_known(instance, selection)
    total = sum(instance.cost[p] for p in sorted(sel))
    for (a, b), v in sorted(instance.savings.items()):
        if a in sel and b in sel:
            total -= v
    return total


def validate_solution(instance: MqoInstance, selection: Iterable[str]) -> ValidationReport:
    """Check that the selection picks exactly one plan per query."""
    sel = _check_plans_known(instance, selection)
    counts = {q: 0 for q in instance.queries}
    for p in sel:
        counts[instance.query_of[p]] += 1
    violations = tuple(q for q in instance.queries if counts[q] != 1)
    return ValidationReport(valid=not violations, counts=counts, violations=violations)


def _digits_for(block: np.ndarray, sizes: list[int], combos: int) -> list[np.ndarray]:
    # Mixed-radix decomposition, first query most significant.
    digits = []
    stride = combos
    for s in sizes:
        stride //= s
        digits.append((block // stride) % s)
    return digits


def brute_force_mqo(
    instance: MqoInstance, budget: int = DEFAULT_ENUMERATION_BUDGET
) -> tuple[PlanSelection, float]:
    """Exhaustively enumerate all valid selections and return a global optimum.

    Ties are broken toward the lexicographically smallest sorted plan-id tuple.

    Raises:
        BudgetError: if the combination count exceeds ``budget``.
    """
    sizes = [len(instance.plans_of[q]) for q in instance.queries]
    combos = instance.combination_count()
    if combos > budget:
        raise BudgetError(f"{combos} plan combinations exceed the enumeration budget {budget}")

    plan_arrays = [np.array([instance.cost[p] for p in instance.plans_of[q]]) for q in instance.queries]
    qpos = {q: i for i, q in enumerate(instance.queries)}
    ppos = {p: instance.plans_of[q].index(p) for q in instance.queries for p in instance.plans_of[q]}
    savings = sorted(instance.savings.items())

    best_val = math.inf
    best_sel: tuple[str, ...] | None = None
    for start in range(0, combos, _BLOCK):
        block = np.arange(start, min(start + _BLOCK, combos), dtype=np.int64)
        digits = _digits_for(block, sizes, combos)
        total = np.zeros(len(block))
        for arr, dig in zip(plan_arrays, digits):
            total += arr[dig]
        for (a, b), v in savings:
            qa, qb = qpos[instance.query_of[a]], qpos[instance.query_of[b]]
            total -= v * ((digits[qa] == ppos[a]) & (digits[qb] == ppos[b]))
        block_min = float(total.min())
        if block_min > best_val:
            continue
        if block_min < best_val:
            best_val = block_min
            best_sel = None
        for k in np.nonzero(total == block_min)[0]:
            sel = tuple(
                sorted(
                    instance.plans_of[q][int(digits[i][k])]
                    for i, q in enumerate(instance.queries)
                )
            )
            if best_sel is None or sel < best_sel:
                best_sel = sel
    assert best_sel is not None
    return frozenset(best_sel), best_val


def generate_instance(
    n_queries: int,
    plans_per_query: int,
    savings_density: float,
    cost_range: tuple[float, float] = (10.0, 20.0),
    savings_range: tuple[float, float] = (1.0, 5.0),
    seed: int = 0,
) -> MqoInstance:
    """Draw a random instance; deterministic for a fixed seed.

    Plan costs are uniform in ``cost_range``.  Every inter-query plan pair
    receives a saving, uniform in ``savings_range``, with probability
    ``savings_density``.  Each query forms its own cluster.
    """
    if n_queries < 1 or plans_per_query < 1:
        raise ValueError("need at least one query and one plan per query")
    if not 0.0 <= savings_density <= 1.0:
        raise ValueError(f"savings density must lie in [0, 1], got {savings_density}")
    clo, chi = map(float, cost_range)
    slo, shi = map(float, savings_range)
    if clo > chi or clo < 0:
        raise ValueError(f"invalid cost range ({clo}, {chi})")
    if slo > shi or slo <= 0:
        raise ValueError(f"invalid savings range ({slo}, {shi}); savings must stay positive")

    rng = np.random.default_rng(seed)
    qw = max(len(str(n_queries - 1)), 1)
    pw = max(len(str(plans_per_query - 1)), 1)
    qids = [f"q{i:0{qw}d}" for i in range(n_queries)]
    plan_ids = {q: [f"{q}p{j:0{pw}d}" for j in range(plans_per_query)] for q in qids}

    costs = rng.uniform(clo, chi, size=n_queries * plans_per_query)
    plan_costs = {}
    it = iter(costs)
    for q in qids:
        plan_costs[q] = {p: float(next(it)) for p in plan_ids[q]}

    pairs = [
        (a, b)
        for i in range(n_queries)
        for j in range(i + 1, n_queries)
        for a in plan_ids[qids[i]]
        for b in plan_ids[qids[j]]
    ]
    keep = rng.random(len(pairs)) < savings_density
    values = rng.uniform(slo, shi, size=len(pairs))
    savings = {pair: float(v) for pair, k, v in zip(pairs, keep, values) if k}
    return MqoInstance.of(plan_costs, savings)
