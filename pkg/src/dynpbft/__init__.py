"""Analytical performance toolkit for dynamic-membership PBFT blockchains.

Builds the exact generator of the dynamic voting process, solves it by a
UL-type level factorization, derives block/orphan settlement rates, analyzes
the downstream batch-service transaction queue, and cross-checks everything
against a seeded stochastic simulator.
"""

from .generator import (
    QueueBlocks,
    VotingGenerator,
    build_queue_blocks,
    build_voting_generator,
    dump_triplets,
    transition_rules,
)
from .measures import VotingMeasures, voting_measures
from .model import (
    ModelParams,
    StateClass,
    StateSpace,
    Thresholds,
    VotingState,
    classify,
    enumerate_states,
    state_space_size,
    thresholds,
)
from .pipeline import (
    SystemSolution,
    derive_queue_params,
    solve_system,
    solve_voting,
)
from .qbd import (
    RGFactors,
    SolverError,
    StationaryDistribution,
    compute_rg_factors,
    dense_oracle,
    residual_norm,
    stationary_distribution,
    stationary_from_dense,
    uniformized_oracle,
)
from .queue import (
    QueueParams,
    QueueSolution,
    StabilityError,
    is_stable,
    iterate_rate_matrix,
    queue_stationary,
    rate_matrix_from_blocks,
    stability_report,
    system_throughput,
    throughput,
)
from .simulate import (
    SimConfig,
    SimEstimate,
    SimResult,
    simulate_system,
    simulate_voting,
)

__all__ = [
    "ModelParams",
    "QueueBlocks",
    "QueueParams",
    "QueueSolution",
    "RGFactors",
    "SimConfig",
    "SimEstimate",
    "SimResult",
    "SolverError",
    "StabilityError",
    "StateClass",
    "StateSpace",
    "StationaryDistribution",
    "SystemSolution",
    "Thresholds",
    "VotingGenerator",
    "VotingMeasures",
    "VotingState",
    "build_queue_blocks",
    "build_voting_generator",
    "classify",
    "compute_rg_factors",
    "dense_oracle",
    "derive_queue_params",
    "dump_triplets",
    "enumerate_states",
    "is_stable",
    "iterate_rate_matrix",
    "queue_stationary",
    "rate_matrix_from_blocks",
    "residual_norm",
    "simulate_system",
    "simulate_voting",
    "solve_system",
    "solve_voting",
    "stability_report",
    "state_space_size",
    "stationary_distribution",
    "stationary_from_dense",
    "system_throughput",
    "thresholds",
    "throughput",
    "transition_rules",
    "uniformized_oracle",
    "voting_measures",
]

__version__ = "0.1.0"
