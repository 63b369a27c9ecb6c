"""Tour of the voting-process model: state space, generator, measures.

Builds a small dynamic-membership voting model, inspects its state space
and generator, solves for the stationary distribution along both routes
(level factorization and dense solve), and reads off the performance
measures.  Finishes with the approval-probability sweep that shows how the
block rate responds to voter behavior.
"""

import numpy as np

from dynpbft import (
    ModelParams,
    StateClass,
    build_voting_generator,
    classify,
    compute_rg_factors,
    dense_oracle,
    enumerate_states,
    residual_norm,
    solve_voting,
    stationary_distribution,
    thresholds,
    transition_rules,
)

# ----------------------------------------------------------------------
# A small network: voting needs at least 3 nodes (L=1), at most 8 (N=2).
# Nodes enter at rate 2 and stay for a mean time of 1/2; each vote takes
# 1/10 on average and approves with probability 0.6; settlement takes 1/2.
# ----------------------------------------------------------------------
params = ModelParams(mu=2.0, theta=2.0, gamma=10.0, beta=2.0, p=0.6, L=1, N=2)

space = enumerate_states(params)
print(f"state space: {space.size} states over levels {space.levels}")
print(f"first states: {[tuple(s) for s in space.states[:5]]}")

# decision thresholds by node count: a block needs more than two thirds
for n in range(params.n_min, params.n_max + 1):
    t = thresholds(params, n)
    print(f"  n={n}: block at m>={t.m_min}, orphan at k>={t.k_min}")

# classification of a few states
for s in [(4, 0, 0), (4, 3, 0), (4, 1, 2), (2, 0, 0)]:
    print(f"  {s} -> {classify(params, s).name}")

# every state exposes its outgoing transitions; the generator is assembled
# from exactly these
print("\ntransitions out of (4, 3, 0):")
for target, rate in transition_rules(params, (4, 3, 0)):
    print(f"  -> {tuple(target)} at rate {rate:g}")

# ----------------------------------------------------------------------
# Solve for the stationary distribution, twice: the level factorization is
# the production path, the dense linear solve is the cross-check.
# ----------------------------------------------------------------------
gen = build_voting_generator(params)
factors = compute_rg_factors(gen)
dist = stationary_distribution(gen, factors)
oracle = dense_oracle(gen)
print(f"\nfactorization vs dense solve: max gap {np.abs(dist.pi - oracle.pi).max():.2e}")
print(f"balance residual |pi Q|: {residual_norm(gen, dist):.2e}")

# mass by level and by class
for level in space.levels:
    print(f"  level {level}: mass {dist.level_mass(level):.4f}")
codes = space.class_codes
for cls in StateClass:
    print(f"  {cls.name}: {dist.pi[codes == cls].sum():.4f}")

# ----------------------------------------------------------------------
# Performance measures, and how they respond to the approval probability.
# ----------------------------------------------------------------------
_, m = solve_voting(params)
print(f"\nmeasures at p=0.6: zeta1={m.zeta1:.4f} zeta2={m.zeta2:.4f} "
      f"A={m.completed:.4f} B={m.no_quorum:.4f} C={m.voting:.4f}")
print(f"settlement rates: r1={m.r1:.4f} (blocks), r2={m.r2:.4f} (rollbacks)")

print("\napproval sweep (zeta1 and r1 grow with p, zeta2 and r2 shrink):")
print(f"{'p':>6} {'zeta1':>8} {'zeta2':>8} {'r1':>8} {'r2':>8}")
for p in np.linspace(0.4, 0.7, 7):
    _, m = solve_voting(ModelParams(mu=2.0, theta=2.0, gamma=10.0, beta=2.0,
                                    p=float(p), L=1, N=2))
    print(f"{p:6.2f} {m.zeta1:8.4f} {m.zeta2:8.4f} {m.r1:8.4f} {m.r2:8.4f}")
