"""Toolchain for solving batched plan selection via QUBO reduction.

Pipeline: model an instance (:mod:`quboplan.mqo`), reduce it to a binary
quadratic energy function (:mod:`quboplan.logical`), embed that on a
simulated Chimera lattice (:mod:`quboplan.chimera`, :mod:`quboplan.physical`),
and sample with an annealing-style solver or classical baselines
(:mod:`quboplan.solvers`).  :mod:`quboplan.bench` reproduces the cost-vs-time
benchmark protocol; :mod:`quboplan.cli` chains everything end to end.
"""

__version__ = "0.1.0"

from .chimera import (
    ChimeraGraph,
    Embedding,
    FitError,
    clustered_embedding,
    drop_broken_chains,
    triad_embedding,
    verify_embedding,
)
from .logical import (
    LogicalMapping,
    Qubo,
    brute_force_qubo,
    decode_logical,
    energy,
    logical_map,
    repair_selection,
)
from .mqo import (
    BudgetError,
    InstanceError,
    MqoInstance,
    PlanSelection,
    UnknownPlanError,
    brute_force_mqo,
    cost,
    generate_instance,
    validate_solution,
)
from .physical import (
    EmbeddingError,
    PhysicalQubo,
    brute_force_physical,
    decode_physical,
    embed_qubo,
    encode_assignment,
    physical_energy,
)
from .solvers import (
    AnnealParams,
    SolverRunRecord,
    genetic_algorithm,
    hill_climbing,
    simulated_annealing,
    solve_exact,
)

__all__ = [
    "AnnealParams",
    "BudgetError",
    "ChimeraGraph",
    "Embedding",
    "EmbeddingError",
    "FitError",
    "InstanceError",
    "LogicalMapping",
    "MqoInstance",
    "PhysicalQubo",
    "PlanSelection",
    "Qubo",
    "SolverRunRecord",
    "UnknownPlanError",
    "brute_force_mqo",
    "brute_force_physical",
    "brute_force_qubo",
    "clustered_embedding",
    "cost",
    "decode_logical",
    "decode_physical",
    "drop_broken_chains",
    "embed_qubo",
    "encode_assignment",
    "energy",
    "generate_instance",
    "genetic_algorithm",
    "hill_climbing",
    "logical_map",
    "physical_energy",
    "repair_selection",
    "simulated_annealing",
    "solve_exact",
    "triad_embedding",
    "validate_solution",
    "verify_embedding",
]
