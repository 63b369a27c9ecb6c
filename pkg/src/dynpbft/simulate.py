"""Seeded stochastic simulation oracles for the voting process and the queue.

Exact event-by-event (Gillespie) simulation driven by the same transition
rules the generator is assembled from, so the simulator and the analytical
solvers can disagree only if one of them is wrong.  Randomness comes from
numpy's PCG64 streams: the master seed is split into one child stream per
replication, so identical configurations reproduce bit-identical results
and replications stay independent.  The hot loops are numba-compiled and
consume pre-drawn chunks of uniforms and exponentials.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .generator import transition_rules
from .model import DEFAULT_MAX_STATES, ModelParams, StateClass, StateSpace, enumerate_states

_CHUNK = 1 << 15
_CHECKPOINTS = 16


@dataclass(frozen=True)
class SimConfig:
    """Common knobs of a simulation run."""

    seed: int
    horizon: float
    warmup: float = 0.0
    replications: int = 20

    def __post_init__(self):
        if self.seed != int(self.seed):
            raise ValueError(f"seed must be an integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if not self.warmup >= 0:
            raise ValueError(f"warmup must be >= 0, got {self.warmup}")
        if not self.horizon > self.warmup:
            raise ValueError(
                f"horizon must exceed warmup, got horizon={self.horizon}, warmup={self.warmup}"
            )
        if int(self.replications) < 1 or self.replications != int(self.replications):
            raise ValueError(f"replications must be an integer >= 1, got {self.replications!r}")
        object.__setattr__(self, "replications", int(self.replications))

    @property
    def duration(self) -> float:
        return self.horizon - self.warmup


@dataclass(frozen=True)
class SimEstimate:
    """Point estimate with its standard error across replications."""

    value: float
    stderr: float
    replications: int


@dataclass(frozen=True)
class SimResult:
    """Per-replication samples plus optional pool trajectories."""

    config: SimConfig
    samples: dict[str, np.ndarray]
    diverged: np.ndarray | None = None
    checkpoint_times: np.ndarray | None = None
    pool_paths: np.ndarray | None = None

    def estimate(self, name: str) -> SimEstimate:
        x = self.samples[name]
        n = x.size
        se = float(x.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        return SimEstimate(float(x.mean()), se, n)

    @property
    def quantities(self) -> tuple[str, ...]:
        return tuple(self.samples)


class _ChainTables:
    """Flattened per-state transition tables for the compiled kernels."""

    def __init__(self, space: StateSpace):
        params = space.params
        ns = space.size
        ptr = np.zeros(ns + 1, dtype=np.int64)
        targets: list[int] = []
        cums: list[float] = []
        kinds: list[int] = []
        exit_rate = np.zeros(ns)
        for i, s in enumerate(space.states):
            total = 0.0
            for tgt, rate in transition_rules(params, s):
                total += rate
                targets.append(space.index[tgt])
                cums.append(total)
                if tgt.n == s.n and tgt.m == 0 and tgt.k == 0:
                    settled_as = space.class_codes[i]
                    kinds.append(1 if settled_as == StateClass.BLOCK_DECIDED else 2)
                else:
                    kinds.append(0)
            if cums:
                cums[-1] = total  # exact top so the selection scan cannot overrun
            exit_rate[i] = total
            ptr[i + 1] = len(targets)
        self.ptr = ptr
        self.target = np.array(targets, dtype=np.int64)
        self.cum = np.array(cums, dtype=np.float64)
        self.kind = np.array(kinds, dtype=np.int8)
        self.exit_rate = exit_rate
        self.class_code = space.class_codes.astype(np.int8)
        self.state_n = np.array([s.n for s in space.states], dtype=np.int64)
        idx_n00 = np.zeros(params.n_max + 1, dtype=np.int64)
        for n in range(params.n_max + 1):
            idx_n00[n] = space.index[(n, 0, 0)]
        self.idx_n00 = idx_n00
        up = np.zeros(params.n_max + 1)
        down = np.zeros(params.n_max + 1)
        up[: params.n_max] = params.mu
        down[1:] = params.theta
        self.idle_up = up
        self.idle_down = down


@njit(cache=True)
def _voting_kernel(ptr, cum, target, kind, exit_rate, class_code,
                   horizon, warmup, u, e, istate, fstate, acc):
    s = istate[0]
    t = fstate[0]
    used = 0
    n = u.shape[0]
    while t < horizon and used < n:
        rate = exit_rate[s]
        t_next = t + e[used] / rate
        lo = t if t > warmup else warmup
        hi = t_next if t_next < horizon else horizon
        if hi > lo:
            acc[class_code[s]] += hi - lo
        if t_next >= horizon:
            t = t_next
            used += 1
            break
        r = u[used] * rate
        j = ptr[s]
        last = ptr[s + 1] - 1
        while j < last and cum[j] < r:
            j += 1
        if kind[j] != 0 and t_next >= warmup:
            acc[3 + kind[j]] += 1.0
        s = target[j]
        t = t_next
        used += 1
    istate[0] = s
    fstate[0] = t
    return used


@njit(cache=True)
def _pool_kernel(lam, r2, r1, b, horizon, warmup, u, e, istate, fstate, acc,
                 cp_times, cp_vals):
    pool = istate[0]
    cp = istate[1]
    t = fstate[0]
    used = 0
    n = u.shape[0]
    while t < horizon and used < n:
        busy = pool >= b
        rate = lam + r2 + (r1 if busy else 0.0)
        t_next = t + e[used] / rate
        lo = t if t > warmup else warmup
        hi = t_next if t_next < horizon else horizon
        if hi > lo:
            acc[2] += (hi - lo) * pool
            if busy:
                acc[0] += hi - lo
        while cp < cp_times.shape[0] and t_next > cp_times[cp]:
            cp_vals[cp] = pool
            cp += 1
        if t_next >= horizon:
            t = t_next
            used += 1
            break
        r = u[used] * rate
        if r < lam:
            pool += 1
        elif r < lam + r2:
            pool += b
        else:
            pool -= b
            if t_next >= warmup:
                acc[1] += 1.0
        t = t_next
        used += 1
    istate[0] = pool
    istate[1] = cp
    fstate[0] = t
    return used


@njit(cache=True)
def _system_kernel(ptr, cum, target, kind, exit_rate, state_n, idx_n00,
                   idle_up, idle_down, lam, b, horizon, warmup,
                   u, e, istate, fstate, acc, cp_times, cp_vals):
    s = istate[0]
    busy = istate[1]
    pool = istate[2]
    cp = istate[3]
    t = fstate[0]
    used = 0
    nr = u.shape[0]
    while t < horizon and used < nr:
        if busy == 1:
            rate = lam + exit_rate[s]
        else:
            nn = state_n[s]
            rate = lam + idle_up[nn] + idle_down[nn]
        t_next = t + e[used] / rate
        lo = t if t > warmup else warmup
        hi = t_next if t_next < horizon else horizon
        if hi > lo:
            acc[2] += (hi - lo) * (pool + b * busy)
            if busy == 1:
                acc[0] += hi - lo
        while cp < cp_times.shape[0] and t_next > cp_times[cp]:
            cp_vals[cp] = pool + b * busy
            cp += 1
        if t_next >= horizon:
            t = t_next
            used += 1
            break
        r = u[used] * rate
        if r < lam:
            pool += 1
            if busy == 0 and pool >= b:
                pool -= b
                busy = 1  # chain already sits at (n,0,0) while idle
        elif busy == 1:
            rr = r - lam
            j = ptr[s]
            last = ptr[s + 1] - 1
            while j < last and cum[j] < rr:
                j += 1
            kd = kind[j]
            s = target[j]
            if kd == 1:
                if t_next >= warmup:
                    acc[1] += 1.0
                busy = 0
            elif kd == 2:
                if t_next >= warmup:
                    acc[3] += 1.0
                pool += b
                busy = 0
            if busy == 0 and kd != 0 and pool >= b:
                pool -= b
                busy = 1
        else:
            nn = state_n[s]
            if r < lam + idle_up[nn]:
                s = idx_n00[nn + 1]
            else:
                s = idx_n00[nn - 1]
        t = t_next
        used += 1
    istate[0] = s
    istate[1] = busy
    istate[2] = pool
    istate[3] = cp
    fstate[0] = t
    return used


def _replication_rngs(cfg: SimConfig) -> list[np.random.Generator]:
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.replications)
    return [np.random.Generator(np.random.PCG64(c)) for c in children]


def simulate_voting(
    params: ModelParams, cfg: SimConfig, max_states: int = DEFAULT_MAX_STATES
) -> SimResult:
    """Exact simulation of the voting chain.

    Estimates the class occupancies (zeta1, zeta2, below-threshold mass and
    undecided mass) from time averages and the settlement rates r1, r2 from
    counts of settlement events per unit time.  Samples are per replication;
    every replication starts from the empty network.
    """
    space = enumerate_states(params, max_states=max_states)
    tables = _ChainTables(space)
    names = ("below", "voting", "zeta1", "zeta2", "r1", "r2")
    samples = {name: np.zeros(cfg.replications) for name in names}
    for rep, rng in enumerate(_replication_rngs(cfg)):
        istate = np.array([space.index[(0, 0, 0)]], dtype=np.int64)
        fstate = np.zeros(1)
        acc = np.zeros(6)
        while fstate[0] < cfg.horizon:
            u = rng.random(_CHUNK)
            e = rng.standard_exponential(_CHUNK)
            _voting_kernel(
                tables.ptr, tables.cum, tables.target, tables.kind,
                tables.exit_rate, tables.class_code,
                cfg.horizon, cfg.warmup, u, e, istate, fstate, acc,
            )
        d = cfg.duration
        samples["below"][rep] = acc[0] / d
        samples["voting"][rep] = acc[1] / d
        samples["zeta1"][rep] = acc[2] / d
        samples["zeta2"][rep] = acc[3] / d
        samples["r1"][rep] = acc[4] / d
        samples["r2"][rep] = acc[5] / d
    return SimResult(config=cfg, samples=samples)


def simulate_system(
    params: ModelParams | None,
    lam: float,
    b: int,
    cfg: SimConfig,
    service: str = "voting",
    rates: tuple[float, float] | None = None,
    runaway: float | None = None,
    max_states: int = DEFAULT_MAX_STATES,
) -> SimResult:
    """Simulation of the pool plus consensus pipeline.

    ``service="voting"`` runs the honest two-level system: the package in
    flight is served by the full voting chain, an orphan outcome returns its
    b transactions to the pool.  ``service="exponential"`` simulates the
    analytical queue itself (block service at r1 from busy states, exogenous
    rollback batches at r2 in every state), which validates the queue solver
    against its own assumptions; ``rates`` supplies (r1, r2) directly, else
    they are derived from ``params`` by the analytical pipeline.

    Unstable configurations are allowed; replications whose final pool
    exceeds ``runaway`` (default 1000 + 50*b) are flagged in ``diverged``.
    Reported: eta1/eta2 (idle/busy fraction), throughput (committed
    transactions per unit time), mean_pool (time-average system size,
    counting any package in flight).
    """
    if not lam > 0:
        raise ValueError(f"lam must be > 0, got {lam}")
    if b != int(b) or int(b) < 1:
        raise ValueError(f"b must be an integer >= 1, got {b!r}")
    b = int(b)
    if service not in ("voting", "exponential"):
        raise ValueError(f"service must be 'voting' or 'exponential', got {service!r}")
    if runaway is None:
        runaway = 1000.0 + 50.0 * b
    if service == "exponential":
        if rates is None:
            if params is None:
                raise ValueError("service='exponential' needs rates=(r1, r2) or params")
            from .pipeline import solve_voting

            _, m = solve_voting(params, max_states=max_states)
            rates = (m.r1, m.r2)
        r1, r2 = rates
        tables = None
    else:
        if params is None:
            raise ValueError("service='voting' needs params")
        space = enumerate_states(params, max_states=max_states)
        tables = _ChainTables(space)
        start_idx = space.index[(0, 0, 0)]
    cp_times = cfg.horizon * (1.0 + np.arange(_CHECKPOINTS)) / _CHECKPOINTS
    names = ("eta1", "eta2", "throughput", "mean_pool")
    samples = {name: np.zeros(cfg.replications) for name in names}
    diverged = np.zeros(cfg.replications, dtype=bool)
    paths = np.zeros((cfg.replications, _CHECKPOINTS), dtype=np.int64)
    for rep, rng in enumerate(_replication_rngs(cfg)):
        fstate = np.zeros(1)
        acc = np.zeros(4)
        cp_vals = np.zeros(_CHECKPOINTS, dtype=np.int64)
        if service == "exponential":
            istate = np.array([0, 0], dtype=np.int64)
            while fstate[0] < cfg.horizon:
                u = rng.random(_CHUNK)
                e = rng.standard_exponential(_CHUNK)
                _pool_kernel(lam, r2, r1, b, cfg.horizon, cfg.warmup,
                             u, e, istate, fstate, acc, cp_times, cp_vals)
            final_pool = int(istate[0])
            cp_vals[int(istate[1]):] = final_pool
        else:
            istate = np.array([start_idx, 0, 0, 0], dtype=np.int64)
            while fstate[0] < cfg.horizon:
                u = rng.random(_CHUNK)
                e = rng.standard_exponential(_CHUNK)
                _system_kernel(tables.ptr, tables.cum, tables.target, tables.kind,
                               tables.exit_rate, tables.state_n, tables.idx_n00,
                               tables.idle_up, tables.idle_down, lam, b,
                               cfg.horizon, cfg.warmup, u, e, istate, fstate, acc,
                               cp_times, cp_vals)
            final_pool = int(istate[2] + b * istate[1])
            cp_vals[int(istate[3]):] = final_pool
        d = cfg.duration
        busy_frac = acc[0] / d
        samples["eta2"][rep] = busy_frac
        samples["eta1"][rep] = 1.0 - busy_frac
        samples["throughput"][rep] = b * acc[1] / d
        samples["mean_pool"][rep] = acc[2] / d
        diverged[rep] = final_pool > runaway
        paths[rep] = cp_vals
    return SimResult(
        config=cfg,
        samples=samples,
        diverged=diverged,
        checkpoint_times=cp_times,
        pool_paths=paths,
    )
