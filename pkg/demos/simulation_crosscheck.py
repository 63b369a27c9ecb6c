"""Stochastic verification: seeded simulation against the analytical stack.

Three checks, in increasing order of what they probe:

1. exact simulation of the voting chain -> the stationary measures;
2. simulation of the analytical pool queue itself -> the queue solver
   (this one must agree, it shares the model);
3. the honest two-level pipeline, where a package in flight is served by
   the full voting chain -> quantifies the error of the decoupling
   approximation, which treats rollbacks as an exogenous stream.
"""

from dynpbft import (
    ModelParams,
    QueueParams,
    SimConfig,
    queue_stationary,
    simulate_system,
    simulate_voting,
    solve_voting,
)


def show(result, name, analytic):
    est = result.estimate(name)
    z = (est.value - analytic) / est.stderr if est.stderr > 0 else float("nan")
    print(f"  {name:>10}: sim {est.value:9.5f} +- {est.stderr:.5f}   "
          f"analytic {analytic:9.5f}   z={z:+5.2f}")


params = ModelParams(mu=1.0, theta=1.0, gamma=10.0, beta=1.0, p=0.9, L=1, N=1)
_, m = solve_voting(params)

# ----------------------------------------------------------------------
# 1. Voting chain: time-average class occupancies and settlement rates.
# ----------------------------------------------------------------------
print("voting chain, 20 replications of horizon 20000:")
cfg = SimConfig(seed=7, horizon=2e4, warmup=500.0, replications=20)
result = simulate_voting(params, cfg)
show(result, "zeta1", m.zeta1)
show(result, "zeta2", m.zeta2)
show(result, "below", m.no_quorum)
show(result, "r1", m.r1)
show(result, "r2", m.r2)

# ----------------------------------------------------------------------
# 2. The queue solver validated against a simulation of its own model.
# ----------------------------------------------------------------------
lam, b = 0.8, 5
qp = QueueParams(lam=lam, b=b, r1=m.r1, r2=m.r2)
sol = queue_stationary(qp)
print("\nanalytical queue simulated directly (exponential service, exogenous "
      "rollback batches):")
surrogate = simulate_system(None, lam, b, cfg, service="exponential",
                            rates=(m.r1, m.r2))
show(surrogate, "eta1", sol.eta1)
show(surrogate, "eta2", sol.eta2)
show(surrogate, "throughput", sol.th)
show(surrogate, "mean_pool", sol.mean_pool())

# ----------------------------------------------------------------------
# 3. The honest pipeline: the gap against the analytical queue is the
# decoupling error -- reported, never asserted away.  Committed throughput
# in the honest system tracks fresh arrivals (recirculated rollbacks are
# not new work), so the analytical TH = lam + b*r2 overcounts by design.
# ----------------------------------------------------------------------
print("\nfull pipeline (package served by the voting chain itself):")
full = simulate_system(params, lam, b, cfg, service="voting")
for name, analytic in [("eta1", sol.eta1), ("eta2", sol.eta2),
                       ("throughput", sol.th), ("mean_pool", sol.mean_pool())]:
    est = full.estimate(name)
    print(f"  {name:>10}: sim {est.value:9.5f} +- {est.stderr:.5f}   "
          f"approximation {analytic:9.5f}   gap {est.value - analytic:+.5f}")
print(f"  fresh-arrival rate lam = {lam} (the honest committed rate hugs this)")

# ----------------------------------------------------------------------
# Instability in action: arrivals beyond capacity make the pool grow
# without bound; replications get flagged once they blow past the cap.
# ----------------------------------------------------------------------
print("\noverloaded pool (lam far beyond b*(r1 - r2)):")
hot = simulate_system(None, 5.0, b, SimConfig(seed=11, horizon=4e3, replications=4),
                      service="exponential", rates=(m.r1, m.r2), runaway=2000)
print(f"  diverged flags: {hot.diverged.tolist()}")
print(f"  pool at checkpoints (rep 0): {hot.pool_paths[0].tolist()}")
