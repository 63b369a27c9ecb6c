"""Shared independent oracles for the test suite."""

import numpy as np


def truncated_pool_oracle(lam, b, r1, r2, num_levels):
    """Dense stationary solve of the pool chain truncated at num_levels levels.

    Built from the scalar transition law (singles +1 at lam, rollback
    batches +b at r2, batch service -b at r1 from pool >= b) with upward
    moves blocked at the cap, independently of the matrix-geometric path.
    """
    size = num_levels * b
    T = np.zeros((size, size))
    for i in range(size):
        if i + 1 < size:
            T[i, i + 1] += lam
        if i + b < size:
            T[i, i + b] += r2
        if i >= b:
            T[i, i - b] += r1
        T[i, i] = -T[i].sum()
    M = T.copy()
    M[:, -1] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    return np.linalg.solve(M.T, rhs)
