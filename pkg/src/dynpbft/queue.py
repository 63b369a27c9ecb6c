"""Stability, rate matrix, and stationary solution of the transaction queue.

The pool is a level-independent QBD over batches of size b: singles arrive
at lam, rollback batches at r2, and block pegging serves a batch at r1.  The
stationary tail is matrix-geometric in the minimal nonnegative root R of
R^2 A2 + R A1 + A0 = 0, found by the classic fixed-point iteration from
zero, whose iterates increase entrywise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .generator import QueueBlocks, build_queue_blocks
from .qbd import SolverError

DEFAULT_EPSILON = 1e-12
DEFAULT_MAX_ITER = 10**6


class StabilityError(RuntimeError):
    """The queue is not positive recurrent for the given parameters."""


@dataclass(frozen=True)
class QueueParams:
    """Arrival, batch and service parameters of the transaction queue.

    lam  single-transaction arrival rate
    b    transactions per package
    r1   block-pegging (service) rate
    r2   rollback batch-arrival rate
    """

    lam: float
    b: int
    r1: float
    r2: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"lam must be > 0, got {self.lam}")
        if self.b != int(self.b) or int(self.b) < 1:
            raise ValueError(f"b must be an integer >= 1, got {self.b!r}")
        object.__setattr__(self, "b", int(self.b))
        if not self.r1 > 0:
            raise ValueError(f"r1 must be > 0, got {self.r1}")
        if self.r2 < 0:
            raise ValueError(f"r2 must be >= 0, got {self.r2}")

    def blocks(self) -> QueueBlocks:
        return build_queue_blocks(self.lam, self.b, self.r1, self.r2)


def is_stable(qp: QueueParams) -> bool:
    """Positive recurrence holds iff lam + r2*b < r1*b (strictly)."""
    return qp.lam + qp.r2 * qp.b < qp.r1 * qp.b


def stability_report(qp: QueueParams) -> str:
    """Human-readable statement of the stability inequality with numbers."""
    lhs = qp.lam + qp.r2 * qp.b
    rhs = qp.r1 * qp.b
    rel = "<" if lhs < rhs else (">" if lhs > rhs else "=")
    verdict = "stable" if lhs < rhs else "unstable"
    return (
        f"{verdict}: lam + r2*b {rel} r1*b "
        f"({qp.lam!r} + {qp.r2!r}*{qp.b} = {lhs!r} {rel} {rhs!r} = {qp.r1!r}*{qp.b})"
    )


def rate_matrix_from_blocks(
    blocks: QueueBlocks,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
) -> tuple[np.ndarray, int]:
    """Minimal nonnegative root of R^2 A2 + R A1 + A0 = 0 by iteration.

    Starts from zero and applies R <- (R^2 A2 + A0) inv(-A1) until the
    largest entrywise change drops below ``epsilon``.  The iterates are
    entrywise monotone nondecreasing; a drop beyond roundoff aborts.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    a0, a1, a2 = blocks.a0, blocks.a1, blocks.a2
    lu = lu_factor((-a1).T)
    R = np.zeros_like(a0)
    for n in range(1, max_iter + 1):
        nxt = lu_solve(lu, (R @ R @ a2 + a0).T).T
        diff = nxt - R
        if diff.min() < -1e-13:
            raise SolverError(
                f"rate-matrix iteration lost monotonicity at step {n} "
                f"(min delta {diff.min():.3e})"
            )
        delta = np.abs(diff).max()
        R = nxt
        if delta < epsilon:
            return R, n
    raise SolverError(
        f"rate-matrix iteration did not converge within {max_iter} steps "
        f"(last delta {delta:.3e})"
    )


def iteration_delta(blocks: QueueBlocks, R: np.ndarray) -> float:
    """Entrywise change one more iteration step would make to ``R``."""
    step = np.linalg.solve((-blocks.a1).T, (R @ R @ blocks.a2 + blocks.a0).T).T
    return float(np.abs(step - R).max())


def iterate_rate_matrix(
    qp: QueueParams,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
    require_stable: bool = True,
) -> tuple[np.ndarray, int]:
    """Rate matrix of the queue, refusing unstable parameters by default.

    ``require_stable=False`` lets diagnostics iterate anyway; the minimal
    root then has spectral radius 1 and the geometric tail does not exist.
    """
    if require_stable and not is_stable(qp):
        raise StabilityError(stability_report(qp))
    return rate_matrix_from_blocks(qp.blocks(), epsilon=epsilon, max_iter=max_iter)


@dataclass(frozen=True)
class QueueSolution:
    """Matrix-geometric stationary solution and derived system measures.

    omega0 covers pool sizes 0..b-1 (idle), omega1 sizes b..2b-1; deeper
    levels follow geometrically as omega1 R^(k-1).  eta1/eta2 are the idle
    and busy probabilities, re1/re2 the effective block and rollback rates,
    th = re1*b the transaction throughput.
    """

    qp: QueueParams
    R: np.ndarray
    omega0: np.ndarray
    omega1: np.ndarray
    eta1: float
    eta2: float
    re1: float
    re2: float
    th: float
    iterations: int

    def omega(self, k: int) -> np.ndarray:
        """Stationary vector of pool level k (sizes k*b .. (k+1)*b - 1)."""
        if k < 0:
            raise ValueError("level index must be >= 0")
        if k == 0:
            return self.omega0
        return self.omega1 @ np.linalg.matrix_power(self.R, k - 1)

    def level_mass(self, k: int) -> float:
        return float(self.omega(k).sum())

    def mean_pool(self) -> float:
        """Time-average number of transactions in the pool.

        Sums k over the geometric tail: the level-k piece contributes
        k*b plus the within-level offsets, so the total reduces to
        resolvent moments of R.
        """
        b = self.qp.b
        offsets = np.arange(b, dtype=np.float64)
        eye = np.eye(b)
        resolvent_one = np.linalg.solve(eye - self.R, np.ones(b))
        resolvent_sq_one = np.linalg.solve(eye - self.R, resolvent_one)
        return float(
            self.omega0 @ offsets
            + b * self.omega1 @ resolvent_sq_one
            + self.omega1 @ np.linalg.solve(eye - self.R, offsets)
        )


def queue_stationary(
    qp: QueueParams,
    R: np.ndarray | None = None,
    epsilon: float = DEFAULT_EPSILON,
    max_iter: int = DEFAULT_MAX_ITER,
) -> QueueSolution:
    """Solve the boundary system and assemble the stationary solution.

    omega0 and omega1 satisfy the two boundary balance equations together
    with total mass omega0 e + omega1 inv(I - R) e = 1; one redundant
    balance column is replaced by the normalization.
    """
    iterations = 0
    if R is None:
        R, iterations = iterate_rate_matrix(qp, epsilon=epsilon, max_iter=max_iter)
    elif not is_stable(qp):
        raise StabilityError(stability_report(qp))
    blocks = qp.blocks()
    b = qp.b
    eye = np.eye(b)
    try:
        tail_weights = np.linalg.solve(eye - R, np.ones(b))
    except np.linalg.LinAlgError as exc:
        raise SolverError("I - R is singular; rate matrix did not converge") from exc
    M = np.block([[blocks.b1_0, blocks.a0], [blocks.a2, blocks.a1 + R @ blocks.a2]])
    M[:, -1] = np.concatenate([np.ones(b), tail_weights])
    rhs = np.zeros(2 * b)
    rhs[-1] = 1.0
    try:
        x = np.linalg.solve(M.T, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError("singular boundary system") from exc
    omega0, omega1 = x[:b], x[b:]
    scale = max(qp.lam, qp.r1, qp.r2, 1.0)
    residual = np.concatenate([
        omega0 @ blocks.b1_0 + omega1 @ blocks.a2,
        omega0 @ blocks.a0 + omega1 @ (blocks.a1 + R @ blocks.a2),
    ])[:-1]  # last balance column was traded for the normalization
    if min(omega0.min(), omega1.min()) < -1e-10 or np.abs(residual).max() > 1e-8 * scale:
        raise SolverError(
            "boundary solve inconsistent (unstable parameters or unconverged R?)"
        )
    eta1 = float(omega0.sum())
    eta2 = 1.0 - eta1
    re1 = eta2 * qp.r1
    re2 = eta2 * qp.r2
    return QueueSolution(
        qp=qp,
        R=R,
        omega0=omega0,
        omega1=omega1,
        eta1=eta1,
        eta2=eta2,
        re1=re1,
        re2=re2,
        th=re1 * qp.b,
        iterations=iterations,
    )


def system_throughput(qp: QueueParams) -> float:
    """Long-run committed-transaction rate: min(inflow, service capacity).

    A stable pool commits exactly its inflow lam + b*r2 per unit time (flow
    balance, equal to the matrix-geometric b*r1*eta2); a saturated pool is
    capped at its service capacity b*r1, the server being busy almost
    always.  Continuous across the stability boundary.
    """
    return min(qp.lam + qp.b * qp.r2, qp.b * qp.r1)


def throughput(qp: QueueParams, sol: QueueSolution, tol: float = 1e-8) -> float:
    """Transaction throughput, cross-checked against the flow-balance identity.

    In stationarity the pool level drifts nowhere, so committed outflow
    re1*b must equal total inflow lam + b*r2; a violation beyond ``tol``
    signals an inconsistent solution.
    """
    expected = qp.lam + qp.b * qp.r2
    if abs(sol.th - expected) > tol:
        raise SolverError(
            f"throughput {sol.th!r} violates the flow identity lam + b*r2 = {expected!r}"
        )
    return sol.th


QUEUE_CSV_COLUMNS = (
    "lambda",
    "b",
    "r1",
    "r2",
    "stable",
    "iterations",
    "eta1",
    "eta2",
    "Re1",
    "Re2",
    "TH",
)


def queue_csv_row(qp: QueueParams, sol: QueueSolution | None) -> list[str]:
    """One CSV row; unstable points carry the flag and empty solver columns."""
    head = [repr(qp.lam), repr(qp.b), repr(qp.r1), repr(qp.r2)]
    if sol is None:
        return head + ["false", "", "", "", "", "", ""]
    return head + [
        "true",
        repr(sol.iterations),
        repr(sol.eta1),
        repr(sol.eta2),
        repr(sol.re1),
        repr(sol.re2),
        repr(sol.th),
    ]
