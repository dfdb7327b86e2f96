"""Reduction of plan-selection instances to binary quadratic (QUBO) form.

One binary variable per plan.  Constraint terms drive every optimum toward
selecting exactly one plan per query: a coverage reward (``-coverage_weight``
on each variable) makes empty queries unattractive, and a conflict penalty
(``+conflict_weight`` on each same-query pair) forbids double selection.
Costs enter linearly, savings as negative pair weights.  The derived weight
bounds guarantee that QUBO optima decode to valid, cost-optimal selections.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .mqo import BudgetError, InstanceError, MqoInstance, PlanSelection

#: Largest variable count the exhaustive QUBO solver enumerates (2^n states).
DEFAULT_QUBO_BUDGET = 24

#: Strictness margin added on top of each derived weight bound.
DEFAULT_MARGIN = 0.25

_BLOCK = 1 << 18


@dataclass(frozen=True)
class Qubo:
    """Binary quadratic energy function ``sum_i w_i x_i + sum_{i<j} w_ij x_i x_j``.

    ``linear`` holds the diagonal weights (x^2 == x for binary x), ``quadratic``
    maps sorted index pairs of distinct variables to their weights.
    """

    num_vars: int
    linear: dict[int, float]
    quadratic: dict[tuple[int, int], float]

    def __post_init__(self) -> None:
        for v in self.linear:
            if not 0 <= v < self.num_vars:
                raise ValueError(f"linear weight on unknown variable {v}")
        for (u, v) in self.quadratic:
            if not (0 <= u < v < self.num_vars):
                raise ValueError(f"quadratic key ({u}, {v}) must be sorted, distinct, in range")

    def dense(self) -> tuple[np.ndarray, np.ndarray]:
        """Linear weights as a vector and quadratic weights as a symmetric matrix."""
        lin = np.zeros(self.num_vars)
        for v, w in self.linear.items():
            lin[v] = w
        mat = np.zeros((self.num_vars, self.num_vars))
        for (u, v), w in self.quadratic.items():
            mat[u, v] = w
            mat[v, u] = w
        return lin, mat


@dataclass(frozen=True)
class LogicalMapping:
    """Plan <-> variable correspondence plus the derived constraint weights."""

    plan_of_var: tuple[str, ...]
    coverage_weight: float
    conflict_weight: float
    margin: float

    @property
    def var_of_plan(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.plan_of_var)}


def logical_map(instance: MqoInstance, margin: float = DEFAULT_MARGIN) -> tuple[Qubo, LogicalMapping]:
    """Translate an instance into a QUBO over one variable per plan.

    Weight derivation (``margin`` keeps both bounds strict):

    * ``coverage_weight = max plan cost + margin`` - selecting any plan beats
      selecting none for its query.
    * ``conflict_weight = coverage_weight + max over plans of its total
      savings + margin`` - dropping a duplicate plan always pays off, even
      when the duplicate unlocked every saving it participates in.

    Variable ``i`` carries linear weight ``cost - coverage_weight``; each
    same-query plan pair carries ``+conflict_weight``; each savings pair
    carries the negated saving.
    """
    if not instance.queries:
        raise InstanceError("cannot map an instance without queries")
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")

    plans = instance.plans
    var = {p: i for i, p in enumerate(plans)}
    coverage = max(instance.cost[p] for p in plans) + margin
    savings_sum = {p: 0.0 for p in plans}
    for (a, b), v in instance.savings.items():
        savings_sum[a] += v
        savings_sum[b] += v
    conflict = coverage + max(savings_sum.values()) + margin

    linear = {var[p]: instance.cost[p] - coverage for p in plans}
    quadratic: dict[tuple[int, int], float] = {}
    for q in instance.queries:
        qplans = instance.plans_of[q]
        for i, a in enumerate(qplans):
            for b in qplans[i + 1 :]:
                u, v = sorted((var[a], var[b]))
                quadratic[(u, v)] = conflict
    for (a, b), s in instance.savings.items():
        u, v = sorted((var[a], var[b]))
        quadratic[(u, v)] = -s

    qubo = Qubo(num_vars=len(plans), linear=linear, quadratic=quadratic)
    mapping = LogicalMapping(
        plan_of_var=plans,
        coverage_weight=coverage,
        conflict_weight=conflict,
        margin=margin,
    )
    return qubo, mapping


def energy(qubo: Qubo, assignment: Sequence[int]) -> float:
    """Evaluate the energy of one 0/1 assignment."""
    if len(assignment) != qubo.num_vars:
        raise ValueError(f"assignment has {len(assignment)} bits, QUBO has {qubo.num_vars} variables")
    total = 0.0
    for v, w in sorted(qubo.linear.items()):
        total += w * assignment[v]
    for (u, v), w in sorted(qubo.quadratic.items()):
        total += w * assignment[u] * assignment[v]
    return total


def energy_batch(qubo: Qubo, states: np.ndarray) -> np.ndarray:
    """Vectorized energies for a ``(samples, num_vars)`` 0/1 matrix."""
    lin, mat = qubo.dense()
    x = np.asarray(states, dtype=float)
    return x @ lin + 0.5 * np.einsum("ri,ri->r", x @ mat, x)


def decode_logical(mapping: LogicalMapping, assignment: Sequence[int]) -> PlanSelection:
    """Read the selected plan set off an assignment (validity not enforced)."""
    if len(assignment) != len(mapping.plan_of_var):
        raise ValueError(
            f"assignment has {len(assignment)} bits, mapping has {len(mapping.plan_of_var)} plans"
        )
    return frozenset(p for p, bit in zip(mapping.plan_of_var, assignment) if bit)


def _bits_of(index: int, n: int) -> np.ndarray:
    return ((index >> np.arange(n)) & 1).astype(np.int8)


def brute_force_qubo(qubo: Qubo, budget: int = DEFAULT_QUBO_BUDGET) -> tuple[np.ndarray, float]:
    """Enumerate all assignments and return a global minimum.

    Variable ``i`` is bit ``i`` of the enumeration index; ties resolve to the
    lowest index, i.e. the assignment whose bit vector reads as the smallest
    integer.
    """
    n = qubo.num_vars
    if n > budget:
        raise BudgetError(f"{n} variables exceed the exhaustive budget of {budget}")
    if n == 0:
        return np.zeros(0, dtype=np.int8), 0.0
    lin, mat = qubo.dense()
    best_val = np.inf
    best_idx = 0
    for start in range(0, 1 << n, _BLOCK):
        idx = np.arange(start, min(start + _BLOCK, 1 << n), dtype=np.int64)
        x = ((idx[:, None] >> np.arange(n)) & 1).astype(float)
        e = x @ lin + 0.5 * np.einsum("ri,ri->r", x @ mat, x)
        k = int(np.argmin(e))
        if e[k] < best_val:
            best_val = float(e[k])
            best_idx = int(idx[k])
    return _bits_of(best_idx, n), best_val


def qubo_minima(qubo: Qubo, atol: float = 1e-9) -> tuple[list[np.ndarray], float]:
    """All assignments within ``atol`` of the global minimum (small QUBOs only)."""
    n = qubo.num_vars
    if n > 22:
        raise BudgetError(f"{n} variables is too large to collect all minima")
    if n == 0:
        return [np.zeros(0, dtype=np.int8)], 0.0
    lin, mat = qubo.dense()
    energies = np.empty(1 << n)
    for start in range(0, 1 << n, _BLOCK):
        idx = np.arange(start, min(start + _BLOCK, 1 << n), dtype=np.int64)
        x = ((idx[:, None] >> np.arange(n)) & 1).astype(float)
        energies[start : start + len(idx)] = x @ lin + 0.5 * np.einsum("ri,ri->r", x @ mat, x)
    best = float(energies.min())
    hits = np.nonzero(energies <= best + atol)[0]
    return [_bits_of(int(k), n) for k in hits], best


def repair_selection(instance: MqoInstance, selection: Iterable[str]) -> PlanSelection:
    """Deterministically coerce any plan set into a valid selection.

    Queries are processed in canonical order.  A query with no selected plan
    gets its cheapest one; a query with several keeps the plan whose cost
    minus savings toward already-kept plans is smallest.  Ties go to the
    lexicographically smallest plan id.  Valid selections pass through
    unchanged.
    """
    sel = frozenset(selection)
    for p in sorted(sel):
        if p not in instance.cost:
            raise InstanceError(f"cannot repair selection with unknown plan {p!r}")
    kept: list[str] = []
    for q in instance.queries:
        chosen = [p for p in instance.plans_of[q] if p in sel]
        if len(chosen) == 1:
            kept.append(chosen[0])
            continue
        candidates = chosen if chosen else list(instance.plans_of[q])

        def margin_cost(p: str) -> float:
            gain = sum(
                instance.savings.get((p, k) if p < k else (k, p), 0.0) for k in kept
            )
            return instance.cost[p] - gain

        kept.append(min(candidates, key=lambda p: (margin_cost(p), p)))
    return frozenset(kept)


# -- canonical QUBO file format -------------------------------------------


def qubo_to_json_dict(qubo: Qubo, mapping: LogicalMapping | None = None) -> dict:
    doc: dict = {
        "num_vars": qubo.num_vars,
        "linear": [[v, w] for v, w in sorted(qubo.linear.items())],
        "quadratic": [[u, v, w] for (u, v), w in sorted(qubo.quadratic.items())],
    }
    if mapping is not None:
        doc["mapping"] = {
            "plans": list(mapping.plan_of_var),
            "coverage_weight": mapping.coverage_weight,
            "conflict_weight": mapping.conflict_weight,
            "margin": mapping.margin,
        }
    return doc


def save_qubo(path, qubo: Qubo, mapping: LogicalMapping | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(qubo_to_json_dict(qubo, mapping), indent=2, sort_keys=True) + "\n")


def qubo_from_json_dict(doc: Mapping) -> tuple[Qubo, LogicalMapping | None]:
    qubo = Qubo(
        num_vars=int(doc["num_vars"]),
        linear={int(v): float(w) for v, w in doc.get("linear", [])},
        quadratic={(int(u), int(v)): float(w) for u, v, w in doc.get("quadratic", [])},
    )
    mapping = None
    if "mapping" in doc:
        m = doc["mapping"]
        mapping = LogicalMapping(
            plan_of_var=tuple(m["plans"]),
            coverage_weight=float(m["coverage_weight"]),
            conflict_weight=float(m["conflict_weight"]),
            margin=float(m["margin"]),
        )
    return qubo, mapping


def load_qubo(path) -> tuple[Qubo, LogicalMapping | None]:
    with open(path, "r", encoding="utf-8") as fh:
        return qubo_from_json_dict(json.load(fh))
