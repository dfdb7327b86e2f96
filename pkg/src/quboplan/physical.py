"""Translation of a logical QUBO onto Chimera hardware coordinates.

Each logical linear weight is split evenly over its variable's chain; each
logical quadratic weight lands on exactly one available coupler between the
two chains (first in canonical edge order).  Consecutive chain qubits then
receive consistency terms ``w * (b1 + b2 - 2*b1*b2)`` whose strength ``w``
is derived per chain so that every global minimum of the physical energy
assigns each chain uniformly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .chimera import ChimeraGraph, Embedding, EmbeddingReport, verify_embedding
from .logical import DEFAULT_MARGIN, DEFAULT_QUBO_BUDGET, Qubo, brute_force_qubo, qubo_minima


class EmbeddingError(ValueError):
    """The embedding failed verification against the QUBO."""

    def __init__(self, report: EmbeddingReport):
        lines = "; ".join(f"{v.kind}: {v.detail}" for v in report.violations)
        super().__init__(f"embedding verification failed: {lines}")
        self.report = report


@dataclass(frozen=True)
class PhysicalQubo:
    """Qubit and coupler weights on a Chimera graph, plus per-chain strengths."""

    graph: ChimeraGraph
    qubit_weight: dict[int, float]
    coupler_weight: dict[tuple[int, int], float]
    chain_strength: dict[int, float]

    def __post_init__(self) -> None:
        for (a, b), _w in self.coupler_weight.items():
            if not self.graph.has_edge(a, b):
                raise ValueError(f"coupler ({a}, {b}) is not an edge of the graph")
        for v, w in self.chain_strength.items():
            if w <= 0:
                raise ValueError(f"chain strength for variable {v} must be positive, got {w}")

    def used_qubits(self) -> tuple[int, ...]:
        used = set(self.qubit_weight)
        for a, b in self.coupler_weight:
            used.add(a)
            used.add(b)
        return tuple(sorted(used))

    def as_qubo(self) -> tuple[Qubo, tuple[int, ...]]:
        """Compact the weights into a QUBO over the used qubits, in id order."""
        order = self.used_qubits()
        index = {q: i for i, q in enumerate(order)}
        linear = {index[q]: w for q, w in self.qubit_weight.items() if w != 0.0}
        quadratic = {}
        for (a, b), w in self.coupler_weight.items():
            u, v = sorted((index[a], index[b]))
            quadratic[(u, v)] = w
        return Qubo(num_vars=len(order), linear=linear, quadratic=quadratic), order


def spread_logical(
    qubo: Qubo, embedding: Embedding, graph: ChimeraGraph
) -> tuple[dict[int, float], dict[tuple[int, int], float]]:
    """Steps one and two of the mapping: distribute logical weights, no chain terms.

    Linear weights are split evenly across chain qubits (zero shares are kept
    so that every chain qubit is marked as used); each quadratic weight goes
    to the first available coupler between the two chains.
    """
    qubit_weight: dict[int, float] = {}
    for v in sorted(embedding.chains):
        if v >= qubo.num_vars:
            continue
        chain = embedding.chains[v]
        share = qubo.linear.get(v, 0.0) / len(chain)
        for q in chain:
            qubit_weight[q] = share
    coupler_weight: dict[tuple[int, int], float] = {}
    for (u, v), w in sorted(qubo.quadratic.items()):
        candidates = graph.edges_between(embedding.chains[u], embedding.chains[v])
        edge = candidates[0]
        coupler_weight[edge] = coupler_weight.get(edge, 0.0) + w
    return qubit_weight, coupler_weight


def _chain_strengths(
    embedding: Embedding,
    num_vars: int,
    qubit_weight: Mapping[int, float],
    coupler_weight: Mapping[tuple[int, int], float],
    margin: float,
) -> dict[int, float]:
    # Worst-case energy increase of forcing a chain to a uniform value, from
    # logical weights only: flipping qubit b from 0 to 1 adds its weight plus
    # every positive outgoing coupler; 1 to 0 analogously with signs reversed.
    # Each per-qubit bound is floored at zero before summing: forcing the
    # chain flips only the minority qubits, so an already-aligned qubit must
    # not subsidize the bound with a negative term (otherwise mixed-sign
    # chains admit ground states with broken chains).  The strength is the
    # cheaper of the two uniform completions plus the margin.
    touching: dict[int, list[tuple[int, float]]] = {}
    for (a, b), w in coupler_weight.items():
        touching.setdefault(a, []).append((b, w))
        touching.setdefault(b, []).append((a, w))

    strengths = {}
    for v in sorted(embedding.chains):
        if v >= num_vars:
            continue
        chain = set(embedding.chains[v])
        up = 0.0
        down = 0.0
        for q in embedding.chains[v]:
            w = qubit_weight.get(q, 0.0)
            pos = neg = 0.0
            for other, cw in touching.get(q, ()):
                if other not in chain:
                    pos += max(cw, 0.0)
                    neg += max(-cw, 0.0)
            up += max(w + pos, 0.0)
            down += max(-w + neg, 0.0)
        strengths[v] = min(up, down) + margin
    return strengths


def embed_qubo(
    qubo: Qubo,
    embedding: Embedding,
    graph: ChimeraGraph,
    margin: float = DEFAULT_MARGIN,
) -> PhysicalQubo:
    """Produce the physical weight assignment for a verified embedding.

    Raises:
        EmbeddingError: when ``verify_embedding`` reports violations.
    """
    report = verify_embedding(embedding, qubo, graph)
    if not report.ok:
        raise EmbeddingError(report)
    if margin <= 0:
        raise ValueError(f"margin must be positive, got {margin}")

    qubit_weight, coupler_weight = spread_logical(qubo, embedding, graph)
    strengths = _chain_strengths(embedding, qubo.num_vars, qubit_weight, coupler_weight, margin)

    for v in sorted(embedding.chains):
        if v >= qubo.num_vars:
            continue
        chain = embedding.chains[v]
        w = strengths[v]
        for a, b in zip(chain, chain[1:]):
            qubit_weight[a] = qubit_weight.get(a, 0.0) + w
            qubit_weight[b] = qubit_weight.get(b, 0.0) + w
            edge = (a, b) if a < b else (b, a)
            coupler_weight[edge] = coupler_weight.get(edge, 0.0) - 2.0 * w
    return PhysicalQubo(
        graph=graph,
        qubit_weight=qubit_weight,
        coupler_weight=coupler_weight,
        chain_strength=strengths,
    )


def physical_energy(pq: PhysicalQubo, sample: Mapping[int, int]) -> float:
    """Energy of a qubit sample; every used qubit must carry a value."""
    total = 0.0
    for q, w in sorted(pq.qubit_weight.items()):
        if q not in sample:
            raise ValueError(f"sample is missing a value for qubit {q}")
        total += w * sample[q]
    for (a, b), w in sorted(pq.coupler_weight.items()):
        if a not in sample or b not in sample:
            missing = a if a not in sample else b
            raise ValueError(f"sample is missing a value for qubit {missing}")
        total += w * sample[a] * sample[b]
    return total


@dataclass(frozen=True)
class ChainReport:
    """Chains whose qubits disagreed during read-out."""

    inconsistent: tuple[int, ...]

    @property
    def consistent(self) -> bool:
        return not self.inconsistent


def decode_physical(embedding: Embedding, sample: Mapping[int, int]) -> tuple[np.ndarray, ChainReport]:
    """Read one bit per chain: exact value if uniform, majority vote otherwise.

    Vote ties resolve to 0.  Requires chains for consecutive variables
    starting at 0.
    """
    if not embedding.chains:
        return np.zeros(0, dtype=np.int8), ChainReport(())
    n = max(embedding.chains) + 1
    assignment = np.zeros(n, dtype=np.int8)
    flagged = []
    for v in range(n):
        if v not in embedding.chains:
            raise ValueError(f"embedding has no chain for variable {v}")
        chain = embedding.chains[v]
        bits = []
        for q in chain:
            if q not in sample:
                raise ValueError(f"sample is missing a value for qubit {q}")
            bits.append(int(sample[q]))
        ones = sum(bits)
        if 0 < ones < len(bits):
            flagged.append(v)
        assignment[v] = 1 if 2 * ones > len(bits) else 0
    return assignment, ChainReport(tuple(flagged))


def encode_assignment(embedding: Embedding, assignment) -> dict[int, int]:
    """Replicate each variable's bit along its chain (the consistent sample)."""
    sample = {}
    for v, chain in embedding.chains.items():
        bit = int(assignment[v])
        for q in chain:
            sample[q] = bit
    return sample


def brute_force_physical(
    pq: PhysicalQubo, budget: int = DEFAULT_QUBO_BUDGET
) -> tuple[dict[int, int], float]:
    """Exhaustive ground state of the physical energy over the used qubits."""
    qubo, order = pq.as_qubo()
    bits, value = brute_force_qubo(qubo, budget=budget)
    return {q: int(b) for q, b in zip(order, bits)}, value


def physical_minima(pq: PhysicalQubo, atol: float = 1e-9) -> tuple[list[dict[int, int]], float]:
    """All ground states within ``atol`` (small problems only)."""
    qubo, order = pq.as_qubo()
    states, value = qubo_minima(qubo, atol=atol)
    return [{q: int(b) for q, b in zip(order, bits)} for bits in states], value


# -- file format -------------------------------------------------------------


def save_physical(path, pq: PhysicalQubo) -> None:
    doc = {
        "grid": [pq.graph.rows, pq.graph.cols],
        "qubit_weights": [[q, w] for q, w in sorted(pq.qubit_weight.items())],
        "coupler_weights": [[a, b, w] for (a, b), w in sorted(pq.coupler_weight.items())],
        "chain_penalties": [[v, w] for v, w in sorted(pq.chain_strength.items())],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_physical(path) -> PhysicalQubo:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    rows, cols = doc["grid"]
    return PhysicalQubo(
        graph=ChimeraGraph(int(rows), int(cols)),
        qubit_weight={int(q): float(w) for q, w in doc.get("qubit_weights", [])},
        coupler_weight={
            (int(a), int(b)): float(w) for a, b, w in doc.get("coupler_weights", [])
        },
        chain_strength={int(v): float(w) for v, w in doc.get("chain_penalties", [])},
    )
