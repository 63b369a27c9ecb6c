"""Infinitesimal generators: the voting chain and the transaction-queue blocks.

The voting process is a finite QBD: levels are node counts, phases are the
(m, k) vote tallies.  The generator is assembled row by row from explicit
transition rules and stored sparse; per-level blocks are extracted dense for
the level-recursive solver.  The transaction pool is a level-independent QBD
whose four b-by-b blocks are built here as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .model import (
    DEFAULT_MAX_STATES,
    ModelParams,
    StateClass,
    StateSpace,
    VotingState,
    classify,
    enumerate_states,
    validate_state,
)


def transition_rules(
    params: ModelParams, state: VotingState
) -> list[tuple[VotingState, float]]:
    """Outgoing transitions (target, rate) of one state.

    Five event families:
      * node entry at mu, raising the level (closed at the cap 3N+2);
      * node departure at theta, lowering the level -- allowed for boundary
        states, for (3L,0,0), and above 3L only while voting is still open
        (never from a fully voted state, and never from a mid-vote state at
        the quorum floor 3L);
      * approve / refuse votes at gamma*p / gamma*q while votes remain open;
      * settlement at beta from any decided state, resetting the tallies to
        (n, 0, 0) while keeping the node count.

    Decided states keep voting until the settlement fires.
    """
    validate_state(params, state)
    n, m, k = state
    lo, hi = params.n_min, params.n_max
    out: list[tuple[VotingState, float]] = []
    if n < lo:
        out.append((VotingState(n + 1, 0, 0), params.mu))
        if n >= 1:
            out.append((VotingState(n - 1, 0, 0), params.theta))
        return out
    votes_open = m + k <= n - 1
    if n <= hi - 1:
        out.append((VotingState(n + 1, m, k), params.mu))
    if (n == lo and m == 0 and k == 0) or (n > lo and votes_open):
        out.append((VotingState(n - 1, m, k), params.theta))
    if votes_open:
        out.append((VotingState(n, m + 1, k), params.gamma * params.p))
        out.append((VotingState(n, m, k + 1), params.gamma * params.q))
    if classify(params, state) in (StateClass.BLOCK_DECIDED, StateClass.ORPHAN_DECIDED):
        out.append((VotingState(n, 0, 0), params.beta))
    return out


@dataclass(frozen=True)
class VotingGenerator:
    """Assembled sparse generator with per-level dense block extraction."""

    space: StateSpace
    Q: sparse.csr_matrix

    def block(self, row_level: int, col_level: int) -> np.ndarray:
        r = self.space.level_slice(row_level)
        c = self.space.level_slice(col_level)
        return self.Q[r, c].toarray()

    def q1(self, level: int) -> np.ndarray:
        """Diagonal block of ``level``."""
        return self.block(level, level)

    def q0(self, level: int) -> np.ndarray:
        """Up block: ``level`` to its successor."""
        return self.block(level, self.space.successor(level))

    def q2(self, level: int) -> np.ndarray:
        """Down block: ``level`` to its predecessor."""
        return self.block(level, self.space.predecessor(level))


def build_voting_generator(
    params: ModelParams,
    space: StateSpace | None = None,
    max_states: int = DEFAULT_MAX_STATES,
) -> VotingGenerator:
    """Assemble the sparse voting generator from the transition rules.

    Each diagonal entry is the negated row exit-rate sum, so rows sum to
    zero by construction.
    """
    if space is None:
        space = enumerate_states(params, max_states=max_states)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i, state in enumerate(space.states):
        exit_rate = 0.0
        for target, rate in transition_rules(params, state):
            rows.append(i)
            cols.append(space.index[target])
            vals.append(rate)
            exit_rate += rate
        rows.append(i)
        cols.append(i)
        vals.append(-exit_rate)
    Q = sparse.csr_matrix(
        (vals, (rows, cols)), shape=(space.size, space.size), dtype=np.float64
    )
    return VotingGenerator(space=space, Q=Q)


def dump_triplets(gen: VotingGenerator, path: str) -> None:
    """Write the sparse generator as plain-text (row, col, value) triplets."""
    coo = gen.Q.tocoo()
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {float(v)!r}\n")


@dataclass(frozen=True)
class QueueBlocks:
    """The four b-by-b blocks of the transaction-pool generator.

    Levels hold b consecutive pool sizes.  Within a level, single
    transactions arrive at lam (up one phase, spilling into the next level
    from the last phase); rollback batches arrive at r2 (up one level in the
    same phase); block pegging serves a batch at r1 (down one level, busy
    levels only).
    """

    lam: float
    b: int
    r1: float
    r2: float
    b1_0: np.ndarray
    a0: np.ndarray
    a1: np.ndarray
    a2: np.ndarray


def build_queue_blocks(lam: float, b: int, r1: float, r2: float) -> QueueBlocks:
    """Build the boundary block and the three repeating blocks of the pool QBD."""
    if b != int(b) or int(b) < 1:
        raise ValueError(f"batch size b must be an integer >= 1, got {b!r}")
    b = int(b)
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if not r1 > 0:
        raise ValueError(f"r1 must be > 0, got {r1}")
    if r2 < 0:
        raise ValueError(f"r2 must be >= 0, got {r2}")
    eye = np.eye(b)
    upper = np.eye(b, k=1)
    b1_0 = -(lam + r2) * eye + lam * upper
    a0 = r2 * eye
    a0[b - 1, 0] += lam
    a1 = -(lam + r1 + r2) * eye + lam * upper
    a2 = r1 * eye
    return QueueBlocks(lam=lam, b=b, r1=r1, r2=r2, b1_0=b1_0, a0=a0, a1=a1, a2=a2)
