"""Chimera lattice model and regular minor-embedding patterns.

The lattice is a grid of unit cells, eight qubits each in two columns of
four.  Within a cell every left qubit couples to every right qubit; left
qubits additionally couple to their counterparts in the cells above and
below, right qubits to their counterparts in the cells left and right.
Maximum degree is six.  Qubit ids are dense:

    id = ((row * cols + col) * 2 + side) * 4 + lane,   side 0 = left column.

Two embedding patterns are provided.  The triangular pattern realizes a
complete graph between chains (every pair of chains shares a coupler); the
clustered pattern packs one triangular block per cluster side by side, dense
inside each cluster and sparse between neighbors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

LEFT, RIGHT = 0, 1


class FitError(ValueError):
    """An embedding pattern does not fit the target grid."""

    def __init__(self, message: str, cluster: int | None = None):
        super().__init__(message)
        self.cluster = cluster


@dataclass(frozen=True)
class ChimeraGraph:
    """Cell-grid Chimera topology with an optional broken-qubit mask."""

    rows: int
    cols: int
    broken: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid must have at least one cell")
        for q in self.broken:
            self._check(q)

    @property
    def num_qubits(self) -> int:
        return self.rows * self.cols * 8

    def _check(self, q: int) -> None:
        if not 0 <= q < self.num_qubits:
            raise ValueError(f"qubit id {q} outside [0, {self.num_qubits})")

    def qubit(self, row: int, col: int, side: int, lane: int) -> int:
        return ((row * self.cols + col) * 2 + side) * 4 + lane

    def coords(self, q: int) -> tuple[int, int, int, int]:
        self._check(q)
        lane = q % 4
        side = (q // 4) % 2
        cell = q // 8
        return cell // self.cols, cell % self.cols, side, lane

    def adjacency(self, q: int) -> set[int]:
        """Working neighbors of ``q``; broken qubits report an empty set."""
        self._check(q)
        if q in self.broken:
            return set()
        row, col, side, lane = self.coords(q)
        out = [self.qubit(row, col, 1 - side, k) for k in range(4)]
        if side == LEFT:
            if row > 0:
                out.append(self.qubit(row - 1, col, LEFT, lane))
            if row + 1 < self.rows:
                out.append(self.qubit(row + 1, col, LEFT, lane))
        else:
            if col > 0:
                out.append(self.qubit(row, col - 1, RIGHT, lane))
            if col + 1 < self.cols:
                out.append(self.qubit(row, col + 1, RIGHT, lane))
        return {n for n in out if n not in self.broken}

    def has_edge(self, a: int, b: int) -> bool:
        self._check(a)
        self._check(b)
        if a == b or a in self.broken or b in self.broken:
            return False
        ra, ca, sa, la = self.coords(a)
        rb, cb, sb, lb = self.coords(b)
        if ra == rb and ca == cb:
            return sa != sb
        if sa != sb or la != lb:
            return False
        if sa == LEFT:
            return ca == cb and abs(ra - rb) == 1
        return ra == rb and abs(ca - cb) == 1

    def edges_between(self, chain_a: Sequence[int], chain_b: Sequence[int]) -> list[tuple[int, int]]:
        """Available couplers between two chains, in canonical sorted order."""
        found = {
            (min(a, b), max(a, b))
            for a in chain_a
            for b in chain_b
            if self.has_edge(a, b)
        }
        return sorted(found)


@dataclass(frozen=True)
class Embedding:
    """Map from logical variable to an ordered chain of physical qubits."""

    chains: dict[int, tuple[int, ...]]

    @property
    def num_chains(self) -> int:
        return len(self.chains)

    def qubits_used(self) -> int:
        return sum(len(ch) for ch in self.chains.values())

    def all_qubits(self) -> set[int]:
        return {q for ch in self.chains.values() for q in ch}


def _dense_chains(num_chains: int, graph: ChimeraGraph, anchor: tuple[int, int]) -> dict[int, tuple[int, ...]]:
    # Single-cell packing: two length-1 chains on lane 0, length-2 chains below.
    row, col = anchor
    if num_chains > 5:
        raise FitError(f"dense cell packing holds at most 5 chains, got {num_chains}")
    if not (0 <= row < graph.rows and 0 <= col < graph.cols):
        raise FitError(f"anchor cell {anchor} outside a {graph.rows}x{graph.cols} grid")
    chains: dict[int, tuple[int, ...]] = {}
    if num_chains >= 1:
        chains[0] = (graph.qubit(row, col, LEFT, 0),)
    if num_chains >= 2:
        chains[1] = (graph.qubit(row, col, RIGHT, 0),)
    for v in range(2, num_chains):
        lane = v - 1
        chains[v] = (graph.qubit(row, col, LEFT, lane), graph.qubit(row, col, RIGHT, lane))
    return chains


def _block_chains(
    num_chains: int,
    graph: ChimeraGraph,
    anchor: tuple[int, int],
    transpose: bool = False,
) -> dict[int, tuple[int, ...]]:
    # Triangular block pattern: chain group b owns the diagonal cell (b, b),
    # runs along row b on right-column qubits and down column b on left-column
    # qubits.  Each chain has length k+1; every chain pair meets in some cell.
    # ``transpose`` mirrors the layout along the diagonal.
    r0, c0 = anchor
    k = math.ceil(num_chains / 4)
    if r0 < 0 or c0 < 0 or r0 + k > graph.rows or c0 + k > graph.cols:
        raise FitError(
            f"{num_chains}-chain pattern needs a {k}x{k} cell block at {anchor}, "
            f"grid is {graph.rows}x{graph.cols}"
        )
    chains: dict[int, tuple[int, ...]] = {}
    for v in range(num_chains):
        b, lane = divmod(v, 4)
        if not transpose:
            path = [graph.qubit(r0 + b, c0 + j, RIGHT, lane) for j in range(b)]
            path += [graph.qubit(r0 + b, c0 + b, RIGHT, lane), graph.qubit(r0 + b, c0 + b, LEFT, lane)]
            path += [graph.qubit(r0 + r, c0 + b, LEFT, lane) for r in range(b + 1, k)]
        else:
            path = [graph.qubit(r0 + r, c0 + b, LEFT, lane) for r in range(b)]
            path += [graph.qubit(r0 + b, c0 + b, LEFT, lane), graph.qubit(r0 + b, c0 + b, RIGHT, lane)]
            path += [graph.qubit(r0 + b, c0 + j, RIGHT, lane) for j in range(b + 1, k)]
        chains[v] = tuple(path)
    return chains


def triad_embedding(
    num_chains: int, graph: ChimeraGraph, anchor_cell: tuple[int, int] = (0, 0)
) -> Embedding:
    """Complete-graph embedding: every pair of chains shares a coupler.

    Up to five chains pack into a single cell; larger counts use the
    triangular block pattern with uniform chain length ``ceil(n/4) + 1``.
    """
    if num_chains < 2:
        raise ValueError(f"need at least 2 chains, got {num_chains}")
    if num_chains <= 5:
        return Embedding(_dense_chains(num_chains, graph, anchor_cell))
    return Embedding(_block_chains(num_chains, graph, anchor_cell))


def clustered_embedding(chains_per_cluster: Sequence[int], graph: ChimeraGraph) -> Embedding:
    """One triangular block per cluster, packed side by side along the top rows.

    Blocks alternate orientation so a mirrored block can reuse the last
    column of its predecessor (the predecessor only occupies that column's
    bottom cell, the mirrored block only its top cell).  All chain pairs
    within a cluster share couplers; neighboring clusters touch only through
    the sparse boundary couplers of the lattice.  Variables are numbered
    consecutively in cluster order.

    Raises:
        FitError: naming the first cluster that does not fit.
    """
    counts = list(chains_per_cluster)
    if not counts:
        raise ValueError("need at least one cluster")
    if any(c < 1 for c in counts):
        raise ValueError("every cluster needs at least one chain")

    chains: dict[int, tuple[int, ...]] = {}
    cursor = 0
    next_var = 0
    block_count = 0
    prev_shareable = False
    for idx, c in enumerate(counts):
        dense = c <= 5
        k = 1 if dense else math.ceil(c / 4)
        transpose = (not dense) and block_count % 2 == 1
        # Mirrored blocks and dense cells occupy only the top cell of their
        # first column, so they may reuse the predecessor's last column
        # (whose only cell sits at the bottom).
        share = (dense or transpose) and prev_shareable
        anchor_col = cursor - 1 if share else cursor
        if k > graph.rows or anchor_col + k > graph.cols:
            raise FitError(
                f"cluster {idx} with {c} chains needs a {k}x{k} block at column "
                f"{anchor_col}, grid is {graph.rows}x{graph.cols}",
                cluster=idx,
            )
        if dense:
            part = _dense_chains(c, graph, (0, anchor_col))
        else:
            part = _block_chains(c, graph, (0, anchor_col), transpose)
            block_count += 1
        for v in range(c):
            chains[next_var + v] = part[v]
        next_var += c
        cursor = anchor_col + k
        prev_shareable = (not dense) and (not transpose) and k >= 2
    return Embedding(chains)


def drop_broken_chains(embedding: Embedding, graph: ChimeraGraph) -> Embedding:
    """Remove every chain that touches a broken qubit; keys of survivors stay."""
    return Embedding(
        {
            v: chain
            for v, chain in embedding.chains.items()
            if not any(q in graph.broken for q in chain)
        }
    )


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass(frozen=True)
class EmbeddingReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_embedding(embedding: Embedding, qubo, graph: ChimeraGraph) -> EmbeddingReport:
    """Check chain integrity and coupler availability for every QUBO pair.

    Reported violation kinds: ``missing-chain``, ``empty-chain``,
    ``unknown-qubit``, ``broken-qubit``, ``overlap``, ``chain-gap``,
    ``missing-coupler``.
    """
    out: list[Violation] = []
    owner: dict[int, int] = {}
    intact: dict[int, bool] = {}
    for v in sorted(embedding.chains):
        chain = embedding.chains[v]
        ok = True
        if not chain:
            out.append(Violation("empty-chain", f"variable {v} has an empty chain"))
            intact[v] = False
            continue
        for q in chain:
            if not 0 <= q < graph.num_qubits:
                out.append(Violation("unknown-qubit", f"variable {v} uses qubit {q} outside the grid"))
                ok = False
            elif q in graph.broken:
                out.append(Violation("broken-qubit", f"variable {v} uses broken qubit {q}"))
                ok = False
            elif q in owner and owner[q] != v:
                out.append(Violation("overlap", f"qubit {q} shared by variables {owner[q]} and {v}"))
                ok = False
            else:
                owner[q] = v
        if ok:
            for a, b in zip(chain, chain[1:]):
                if not graph.has_edge(a, b):
                    out.append(
                        Violation("chain-gap", f"variable {v}: qubits {a} and {b} are not adjacent")
                    )
                    ok = False
        intact[v] = ok
    for u in range(qubo.num_vars):
        if u not in embedding.chains:
            out.append(Violation("missing-chain", f"variable {u} has no chain"))
    for (u, v), _w in sorted(qubo.quadratic.items()):
        if u not in embedding.chains or v not in embedding.chains:
            continue
        if not (intact.get(u) and intact.get(v)):
            continue
        if not graph.edges_between(embedding.chains[u], embedding.chains[v]):
            out.append(
                Violation("missing-coupler", f"no coupler available between variables {u} and {v}")
            )
    return EmbeddingReport(tuple(out))


# -- file formats -----------------------------------------------------------


def save_embedding(path, embedding: Embedding, graph: ChimeraGraph) -> None:
    doc = {
        "grid": [graph.rows, graph.cols],
        "chains": [[v, list(embedding.chains[v])] for v in sorted(embedding.chains)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_embedding(path) -> tuple[Embedding, tuple[int, int]]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    rows, cols = doc["grid"]
    chains = {int(v): tuple(int(q) for q in qs) for v, qs in doc["chains"]}
    return Embedding(chains), (int(rows), int(cols))


def load_broken_mask(path) -> frozenset[int]:
    """Read a broken-qubit mask: a JSON list of qubit ids."""
    with open(path, "r", encoding="utf-8") as fh:
        ids = json.load(fh)
    if not isinstance(ids, list):
        raise ValueError("broken-qubit mask must be a JSON list of qubit ids")
    return frozenset(int(q) for q in ids)
