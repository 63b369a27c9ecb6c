"""End-to-end pipelines: voting-process solve and full-system throughput.

These wire the stages together in the order an analyst runs them: build the
voting generator, factorize, take the stationary measures, feed the
settlement rates into the queue, and read off the throughput.
"""

from __future__ import annotations

from dataclasses import dataclass

from .generator import build_voting_generator
from .measures import VotingMeasures, voting_measures
from .model import DEFAULT_MAX_STATES, ModelParams
from .qbd import StationaryDistribution, compute_rg_factors, stationary_distribution
from .queue import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_ITER,
    QueueParams,
    QueueSolution,
    is_stable,
    queue_stationary,
)


def solve_voting(
    params: ModelParams, max_states: int = DEFAULT_MAX_STATES
) -> tuple[StationaryDistribution, VotingMeasures]:
    """Stationary distribution and measures of the voting process."""
    gen = build_voting_generator(params, max_states=max_states)
    dist = stationary_distribution(gen, compute_rg_factors(gen))
    return dist, voting_measures(dist)


def derive_queue_params(
    params: ModelParams, lam: float, b: int, max_states: int = DEFAULT_MAX_STATES
) -> QueueParams:
    """Queue parameters with r1, r2 taken from the solved voting process."""
    _, m = solve_voting(params, max_states=max_states)
    return QueueParams(lam=lam, b=b, r1=m.r1, r2=m.r2)


@dataclass(frozen=True)
class SystemSolution:
    """Joint result of the voting stage and the queue stage."""

    params: ModelParams | None
    measures: VotingMeasures | None
    qp: QueueParams
    queue: QueueSolution


def solve_system(
    params: ModelParams | None = None,
    lam: float | None = None,
    b: int | None = None,
    rates: tuple[float, float] | None = None,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
    max_states: int = DEFAULT_MAX_STATES,
) -> SystemSolution:
    """Throughput pipeline: voting rates (given or derived), then the queue.

    Raises StabilityError when the resulting queue is not positive
    recurrent.
    """
    if lam is None or b is None:
        raise ValueError("lam and b are required")
    measures = None
    if rates is not None:
        r1, r2 = rates
    elif params is not None:
        _, measures = solve_voting(params, max_states=max_states)
        r1, r2 = measures.r1, measures.r2
    else:
        raise ValueError("either params or rates=(r1, r2) is required")
    qp = QueueParams(lam=lam, b=b, r1=r1, r2=r2)
    sol = queue_stationary(qp, epsilon=epsilon, max_iter=max_iter)
    return SystemSolution(params=params, measures=measures, qp=qp, queue=sol)


def queue_is_stable(
    params: ModelParams, lam: float, b: int, max_states: int = DEFAULT_MAX_STATES
) -> bool:
    """Stability of the queue fed by the solved voting process."""
    return is_stable(derive_queue_params(params, lam, b, max_states=max_states))
