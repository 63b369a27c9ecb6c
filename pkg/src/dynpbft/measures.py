"""Stationary performance measures of the voting process.

All quantities are classified sums over the stationary vector, so the
decision logic lives in one place (the state classifier used when the
space was enumerated).
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import ModelParams, StateClass
from .qbd import StationaryDistribution


@dataclass(frozen=True)
class VotingMeasures:
    """Stationary probabilities and settlement rates of the voting process.

    zeta1      probability the package stands decided as a block
    zeta2      probability the package stands decided as an orphan
    completed  zeta1 + zeta2 (a decision has been reached)
    no_quorum  probability the network is below the voting threshold
    voting     probability a vote is running but undecided
    r1         block-pegging rate, beta * zeta1
    r2         rollback rate, beta * zeta2
    """

    zeta1: float
    zeta2: float
    completed: float
    no_quorum: float
    voting: float
    r1: float
    r2: float


def voting_measures(dist: StationaryDistribution) -> VotingMeasures:
    """Derive the stationary measures from a solved distribution."""
    params: ModelParams = dist.space.params
    codes = dist.space.class_codes
    pi = dist.pi
    zeta1 = float(pi[codes == StateClass.BLOCK_DECIDED].sum())
    zeta2 = float(pi[codes == StateClass.ORPHAN_DECIDED].sum())
    no_quorum = float(pi[codes == StateClass.BELOW_THRESHOLD].sum())
    completed = zeta1 + zeta2
    voting = 1.0 - completed - no_quorum
    return VotingMeasures(
        zeta1=zeta1,
        zeta2=zeta2,
        completed=completed,
        no_quorum=no_quorum,
        voting=voting,
        r1=params.beta * zeta1,
        r2=params.beta * zeta2,
    )


VOTING_CSV_COLUMNS = (
    "mu",
    "theta",
    "gamma",
    "beta",
    "p",
    "L",
    "N",
    "zeta1",
    "zeta2",
    "A",
    "B",
    "C",
    "r1",
    "r2",
)


def voting_csv_row(params: ModelParams, m: VotingMeasures) -> list[str]:
    """One CSV row in the documented column order."""
    values = (
        params.mu,
        params.theta,
        params.gamma,
        params.beta,
        params.p,
        params.L,
        params.N,
        m.zeta1,
        m.zeta2,
        m.completed,
        m.no_quorum,
        m.voting,
        m.r1,
        m.r2,
    )
    return [repr(v) for v in values]
