"""Parameters, state space, and decision rules of the dynamic voting process.

A consensus round is tracked by the triple (n, m, k): the number of valid
voting nodes currently in the network, the approvals cast, and the refusals
cast.  Nodes enter and leave while the vote is running, so the quorum size
itself is a moving target.  Voting is only legal once the network holds at
least 3L nodes, and the network is capped at 3N + 2 nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import NamedTuple

import numpy as np

DEFAULT_MAX_STATES = 200_000


class StateClass(IntEnum):
    """Exclusive classification of a voting state."""

    BELOW_THRESHOLD = 0
    UNDECIDED = 1
    BLOCK_DECIDED = 2
    ORPHAN_DECIDED = 3


class VotingState(NamedTuple):
    n: int  # valid voting nodes
    m: int  # approvals cast
    k: int  # refusals cast


class Thresholds(NamedTuple):
    """Decision thresholds at a fixed node count.

    ``m_min`` approvals settle the package as a block; failing that,
    ``k_min`` refusals settle it as an orphan.  The two always satisfy
    m_min + k_min = n + 1, so a fully voted package is decided exactly
    one way.
    """

    m_min: int
    k_min: int


@dataclass(frozen=True)
class ModelParams:
    """Rates, approval probability and node-count bounds of the voting process.

    mu      node entry rate
    theta   node departure rate
    gamma   voting event rate
    beta    settlement rate (block pegging and rollback alike)
    p       probability a vote approves (q = 1 - p refuses)
    L, N    node-count bounds: voting requires at least 3L nodes, the
            network holds at most 3N + 2
    """

    mu: float
    theta: float
    gamma: float
    beta: float
    p: float
    L: int
    N: int

    def __post_init__(self):
        for name in ("mu", "theta", "gamma", "beta", "p"):
            value = getattr(self, name)
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ValueError(f"{name} must be a positive number, got {value!r}")
            object.__setattr__(self, name, value)
            if not value > 0:
                raise ValueError(f"{name} must be > 0, got {value}")
        if not self.p < 1:
            raise ValueError(f"p must lie strictly in (0, 1), got {self.p}")
        for name in ("L", "N"):
            value = getattr(self, name)
            if value != int(value):
                raise ValueError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.L < 1:
            raise ValueError(f"L must be >= 1, got {self.L}")
        if self.N < self.L:
            raise ValueError(f"N must be >= L, got N={self.N}, L={self.L}")

    @property
    def q(self) -> float:
        return 1.0 - self.p

    @property
    def n_min(self) -> int:
        """Smallest node count at which voting is legal (= 3L)."""
        return 3 * self.L

    @property
    def n_max(self) -> int:
        """Node-count cap of the network (= 3N + 2)."""
        return 3 * self.N + 2


def thresholds(params: ModelParams, n: int) -> Thresholds:
    """Decision thresholds at node count ``n``.

    A block needs strictly more than two thirds of the n nodes to approve;
    m_min is the least integer count achieving that.  k_min is the least
    refusal count that makes m_min unreachable.  Defined only for n >= 3L,
    where voting is legal.
    """
    if n < params.n_min:
        raise ValueError(
            f"no decision thresholds below {params.n_min} nodes (got n={n})"
        )
    k3, rem = divmod(n, 3)
    m_min = 2 * k3 + (2 if rem == 2 else 1)
    k_min = k3 + (1 if rem >= 1 else 0)
    return Thresholds(m_min, k_min)


def validate_state(params: ModelParams, state: VotingState) -> None:
    """Raise ValueError unless ``state`` belongs to the state space."""
    n, m, k = state
    if not 0 <= n <= params.n_max:
        raise ValueError(f"node count {n} outside [0, {params.n_max}]")
    if m < 0 or k < 0 or m + k > n:
        raise ValueError(f"vote counts (m={m}, k={k}) invalid for n={n}")
    if n < params.n_min and (m > 0 or k > 0):
        raise ValueError(
            f"states below {params.n_min} nodes carry no votes, got (n={n}, m={m}, k={k})"
        )


def classify(params: ModelParams, state: VotingState) -> StateClass:
    """Classify a state: below threshold, undecided, block- or orphan-decided."""
    validate_state(params, state)
    n, m, k = state
    if n < params.n_min:
        return StateClass.BELOW_THRESHOLD
    t = thresholds(params, n)
    if m >= t.m_min:
        return StateClass.BLOCK_DECIDED
    if k >= t.k_min:
        return StateClass.ORPHAN_DECIDED
    return StateClass.UNDECIDED


def level_size(level: int) -> int:
    """Number of (m, k) phases at a voting level: (l+1)(l+2)/2."""
    return (level + 1) * (level + 2) // 2


def state_space_size(params: ModelParams) -> int:
    """Closed-form total state count: 3L boundary states plus all phases."""
    return 3 * params.L + sum(
        level_size(l) for l in range(params.n_min, params.n_max + 1)
    )


@dataclass(frozen=True)
class StateSpace:
    """Ordered enumeration of the state space with level bookkeeping.

    Boundary states (0,0,0) .. (3L-1,0,0) come first, then each voting level
    l = 3L .. 3N+2 with phases listed by ascending m and, within m, ascending
    k.  ``levels`` labels the boundary block 0 and each voting level by its
    node count.  Immutable after construction and safe to share across
    threads.
    """

    params: ModelParams
    states: tuple[VotingState, ...]
    index: dict[VotingState, int]
    level_slices: dict[int, slice]
    class_codes: np.ndarray

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def levels(self) -> tuple[int, ...]:
        """Level labels in chain order: 0 (boundary), 3L, 3L+1, ..., 3N+2."""
        return (0, *range(self.params.n_min, self.params.n_max + 1))

    def level_slice(self, level: int) -> slice:
        return self.level_slices[level]

    def successor(self, level: int) -> int:
        """Next level up the chain (the successor of the boundary is 3L)."""
        return self.params.n_min if level == 0 else level + 1

    def predecessor(self, level: int) -> int:
        lo = self.params.n_min
        if level == lo:
            return 0
        if level < lo:
            raise ValueError(f"level {level} has no predecessor")
        return level - 1

    def index_of(self, state: VotingState) -> int:
        return self.index[VotingState(*state)]


def enumerate_states(
    params: ModelParams, max_states: int = DEFAULT_MAX_STATES
) -> StateSpace:
    """Enumerate the full state space in canonical order.

    Refuses to build spaces larger than ``max_states`` so a mistyped N does
    not silently allocate a huge model.
    """
    total = state_space_size(params)
    if total > max_states:
        raise ValueError(
            f"state space has {total} states, exceeding the cap of {max_states}; "
            f"raise max_states to build it anyway"
        )
    states: list[VotingState] = []
    level_slices: dict[int, slice] = {}
    for i in range(3 * params.L):
        states.append(VotingState(i, 0, 0))
    level_slices[0] = slice(0, len(states))
    for l in range(params.n_min, params.n_max + 1):
        start = len(states)
        for m in range(l + 1):
            for k in range(l - m + 1):
                states.append(VotingState(l, m, k))
        level_slices[l] = slice(start, len(states))
    index = {s: i for i, s in enumerate(states)}
    codes = np.array([classify(params, s) for s in states], dtype=np.int8)
    return StateSpace(
        params=params,
        states=tuple(states),
        index=index,
        level_slices=level_slices,
        class_codes=codes,
    )
