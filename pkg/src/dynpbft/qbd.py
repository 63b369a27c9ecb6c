"""Stationary analysis of the level-structured voting generator.

The production path runs the UL-type factorization: a backward recursion
builds censored level generators (U), up-measures (R) and down-measures (G),
after which the stationary vector unrolls level by level from the boundary.
Two independent cross-checks ship alongside it: a direct dense linear solve
of pi Q = 0, and a uniformized power iteration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .generator import VotingGenerator
from .model import StateSpace, VotingState

DENSE_GUARD = 20_000


class SolverError(RuntimeError):
    """Numerical failure inside a solver (singular block, no convergence)."""


@dataclass(frozen=True)
class RGFactors:
    """Per-level factors of the UL-type factorization.

    Keyed by level label (0 for the boundary block).  U[l] is the generator
    of the chain censored to levels <= l, restricted to level l; R[l] maps
    level l to its successor, G[l] to its predecessor.
    """

    levels: tuple[int, ...]
    U: dict[int, np.ndarray]
    R: dict[int, np.ndarray]
    G: dict[int, np.ndarray]


@dataclass(frozen=True)
class StationaryDistribution:
    """Stationary probability vector over a state space."""

    space: StateSpace
    pi: np.ndarray

    def prob(self, state: VotingState) -> float:
        return float(self.pi[self.space.index_of(state)])

    def level_mass(self, level: int) -> float:
        return float(self.pi[self.space.level_slice(level)].sum())


def _solve_right(neg_u: np.ndarray, a: np.ndarray) -> np.ndarray:
    """X = a @ inv(neg_u), realized as a linear solve."""
    return np.linalg.solve(neg_u.T, a.T).T


def compute_rg_factors(gen: VotingGenerator) -> RGFactors:
    """Backward recursion for the U-, R- and G-measures.

    Starting from the top level, U[l] = Q1(l) + R[l] Q2(succ(l)) with
    R[l] = Q0(l) inv(-U[succ(l)]); the boundary follows the same step with
    successor 3L.  All inverses are realized as linear solves.
    """
    levels = gen.space.levels
    U: dict[int, np.ndarray] = {}
    R: dict[int, np.ndarray] = {}
    G: dict[int, np.ndarray] = {}
    top = levels[-1]
    U[top] = gen.q1(top)
    for pos in range(len(levels) - 2, -1, -1):
        level, nxt = levels[pos], levels[pos + 1]
        try:
            R[level] = _solve_right(-U[nxt], gen.q0(level))
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular censored generator at level {nxt}") from exc
        U[level] = gen.q1(level) + R[level] @ gen.q2(nxt)
    for level in levels[1:]:
        try:
            G[level] = np.linalg.solve(-U[level], gen.q2(level))
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular censored generator at level {level}") from exc
    return RGFactors(levels=levels, U=U, R=R, G=G)


def stationary_from_dense(Q: np.ndarray) -> np.ndarray:
    """Stationary vector of a dense irreducible generator.

    Solves pi Q = 0 with pi summing to one by replacing the last balance
    column with the normalization condition.
    """
    n = Q.shape[0]
    M = np.array(Q, dtype=np.float64, copy=True)
    M[:, -1] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    try:
        pi = np.linalg.solve(M.T, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError("singular balance system (generator not irreducible?)") from exc
    return pi


def stationary_distribution(
    gen: VotingGenerator, factors: RGFactors | None = None
) -> StationaryDistribution:
    """Stationary vector via the level recursion.

    The boundary piece is the stationary vector of the censored boundary
    generator U[0]; each further level piece is the previous piece pushed
    up through its R factor; the whole vector is then normalized.
    """
    if factors is None:
        factors = compute_rg_factors(gen)
    levels = factors.levels
    v0 = stationary_from_dense(factors.U[0])
    pieces = [v0]
    current = v0
    for pos in range(1, len(levels)):
        current = current @ factors.R[levels[pos - 1]]
        pieces.append(current)
    pi = np.concatenate(pieces)
    total = pi.sum()
    if not np.isfinite(total) or total <= 0:
        raise SolverError("level recursion produced a non-normalizable vector")
    return StationaryDistribution(space=gen.space, pi=pi / total)


def dense_oracle(
    gen: VotingGenerator, max_dense: int = DENSE_GUARD
) -> StationaryDistribution:
    """Independent stationary solve: densify Q and solve the balance system.

    Guarded to ``max_dense`` states; meant as a verification oracle, not the
    production path.
    """
    n = gen.space.size
    if n > max_dense:
        raise ValueError(
            f"dense oracle limited to {max_dense} states, generator has {n}"
        )
    pi = stationary_from_dense(gen.Q.toarray())
    return StationaryDistribution(space=gen.space, pi=pi)


def uniformized_oracle(
    gen: VotingGenerator,
    tol: float = 1e-13,
    max_iter: int = 2_000_000,
) -> StationaryDistribution:
    """Third stationary method: power iteration of the uniformized chain.

    P = I + Q/Lambda with Lambda above the largest exit rate; the iteration
    stops once successive vectors agree to ``tol`` in max norm.
    """
    Q = gen.Q
    n = gen.space.size
    lam = 1.05 * float(np.abs(Q.diagonal()).max())
    P = sparse.eye(n, format="csr") + Q.multiply(1.0 / lam)
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = pi @ P
        if np.abs(nxt - pi).max() < tol:
            pi = nxt
            break
        pi = nxt
    else:
        raise SolverError(f"uniformized iteration did not converge in {max_iter} steps")
    return StationaryDistribution(space=gen.space, pi=pi / pi.sum())


def residual_norm(gen: VotingGenerator, dist: StationaryDistribution) -> float:
    """Max-norm of pi Q, the balance residual of a candidate vector."""
    return float(np.abs(dist.pi @ gen.Q).max())
