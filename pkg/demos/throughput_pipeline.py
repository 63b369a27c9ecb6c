"""End-to-end throughput analysis of the transaction pipeline.

Stage one solves the voting process for the settlement rates r1 (blocks)
and r2 (rollbacks).  Stage two feeds them into the batch-service pool
queue: stability check, rate-matrix iteration, boundary solve, and the
committed-transaction throughput.  Also shows what happens on the other
side of the stability boundary, where the pipeline saturates at its
service capacity.
"""

import numpy as np

from dynpbft import (
    ModelParams,
    QueueParams,
    derive_queue_params,
    is_stable,
    iterate_rate_matrix,
    queue_stationary,
    solve_voting,
    stability_report,
    system_throughput,
    throughput,
)

# ----------------------------------------------------------------------
# Stage one: voting model with a strongly approving electorate.
# ----------------------------------------------------------------------
params = ModelParams(mu=1.0, theta=1.0, gamma=10.0, beta=1.0, p=0.9, L=1, N=1)
_, m = solve_voting(params)
print(f"voting stage: r1={m.r1:.4f} (block pegging), r2={m.r2:.4f} (rollbacks)")

# ----------------------------------------------------------------------
# Stage two: the pool queue.  Singles arrive at lam, packages carry b
# transactions.  Stability requires lam + r2*b < r1*b.
# ----------------------------------------------------------------------
lam, b = 0.8, 5
qp = derive_queue_params(params, lam, b)
print(stability_report(qp))

R, iterations = iterate_rate_matrix(qp)
print(f"rate matrix: {iterations} iterations, spectral radius "
      f"{max(abs(np.linalg.eigvals(R))):.4f}")

sol = queue_stationary(qp, R=R)
print(f"idle probability eta1={sol.eta1:.4f}, busy eta2={sol.eta2:.4f}")
print(f"block rate Re1={sol.re1:.4f}, rollback rate Re2={sol.re2:.4f}")
print(f"throughput TH={throughput(qp, sol):.4f} transactions/time "
      f"(flow identity: lam + b*r2 = {qp.lam + qp.b * qp.r2:.4f})")
print(f"mean pool size: {sol.mean_pool():.2f}")

print("\npool-size distribution by level (batches of b):")
for k in range(8):
    print(f"  level {k} (pool {k * b}..{(k + 1) * b - 1}): {sol.level_mass(k):.5f}")

# ----------------------------------------------------------------------
# Throughput responds to the batch size: larger packages commit more per
# settlement, and the idle fraction grows with b.
# ----------------------------------------------------------------------
print(f"\n{'b':>4} {'stable':>7} {'eta1':>8} {'TH':>8}")
for bv in (2, 5, 10, 20, 40):
    q = QueueParams(lam=lam, b=bv, r1=m.r1, r2=m.r2)
    if is_stable(q):
        s = queue_stationary(q)
        print(f"{bv:4d} {'yes':>7} {s.eta1:8.4f} {s.th:8.4f}")
    else:
        print(f"{bv:4d} {'no':>7} {'':>8} {system_throughput(q):8.4f} (saturated)")

# ----------------------------------------------------------------------
# Saturation: push arrivals past the service capacity b*r1 - b*r2.  The
# committed rate then caps at b*r1 no matter how fast the pool fills.
# ----------------------------------------------------------------------
print(f"\ncapacity of (b=5) pipeline: {5 * m.r1:.4f}")
print(f"{'lam':>6} {'stable':>7} {'TH':>8}")
for lv in (0.5, 1.5, 2.5, 3.5):
    q = QueueParams(lam=lv, b=5, r1=m.r1, r2=m.r2)
    print(f"{lv:6.2f} {'yes' if is_stable(q) else 'no':>7} {system_throughput(q):8.4f}")
