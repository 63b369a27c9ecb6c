"""Command-line entry point: voting, queue, sweep and simulate subcommands.

Model parameters come from a flat key=value config file; the listed flags
override the corresponding file keys.  All output is CSV with fixed,
documented column orders, written to --out or stdout.  Exit codes: 0
success, 1 solver failure, 2 usage or validation error, 3 instability
(queue subcommand only).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .generator import build_voting_generator, dump_triplets
from .measures import VOTING_CSV_COLUMNS, voting_csv_row, voting_measures
from .model import ModelParams
from .pipeline import solve_voting
from .qbd import SolverError, compute_rg_factors, stationary_distribution
from .queue import (
    DEFAULT_EPSILON,
    DEFAULT_MAX_ITER,
    QUEUE_CSV_COLUMNS,
    QueueParams,
    StabilityError,
    is_stable,
    iteration_delta,
    queue_csv_row,
    queue_stationary,
    stability_report,
)
from .simulate import SimConfig, simulate_system, simulate_voting

EXIT_OK = 0
EXIT_SOLVER = 1
EXIT_USAGE = 2
EXIT_UNSTABLE = 3

_MODEL_KEYS = ("mu", "theta", "gamma", "beta", "p", "L", "N")
_FLOAT_KEYS = {"mu", "theta", "gamma", "beta", "p", "lambda", "r1", "r2",
               "epsilon", "horizon", "warmup", "runaway"}
_INT_KEYS = {"L", "N", "b", "max_iter", "seed", "reps"}
_STR_KEYS = {"mode", "target"}
_SWEEPABLE = ("mu", "theta", "gamma", "beta", "p", "lambda", "b", "L", "N", "r1", "r2")

SIMULATE_CSV_COLUMNS = ("mode", "quantity", "rep", "value", "stderr",
                        "analytic", "delta", "diverged")


class UsageError(Exception):
    """Bad invocation or invalid configuration; maps to exit code 2."""


def read_config(path: str) -> dict:
    """Parse a flat key=value file; '#' starts a comment."""
    config: dict = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key in _FLOAT_KEYS:
            config[key] = float(value)
        elif key in _INT_KEYS:
            config[key] = int(value)
        elif key in _STR_KEYS:
            config[key] = value
        else:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
    return config


def _require(config: dict, keys, subcommand: str) -> None:
    missing = [k for k in keys if k not in config]
    if missing:
        raise UsageError(
            f"missing required config key(s) {', '.join(repr(k) for k in missing)} "
            f"for subcommand {subcommand}"
        )


def _model_params(config: dict) -> ModelParams:
    kwargs = {k: config[k] for k in _MODEL_KEYS}
    return ModelParams(**kwargs)


def _parse_sweep(spec: str) -> tuple[str, list]:
    try:
        name, _, rng = spec.partition("=")
        start_s, stop_s, step_s = rng.split(":")
        start, stop, step = float(start_s), float(stop_s), float(step_s)
    except ValueError as exc:
        raise UsageError(f"bad --sweep spec {spec!r}, expected NAME=START:STOP:STEP") from exc
    name = name.strip()
    if name not in _SWEEPABLE:
        raise UsageError(f"cannot sweep {name!r}; choose one of {', '.join(_SWEEPABLE)}")
    if not np.isfinite([start, stop, step]).all() or step <= 0 or stop < start:
        raise UsageError(f"sweep bounds must be finite with positive step: {spec!r}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    values = [start + i * step for i in range(count)]
    if name in ("b", "L", "N"):
        values = [int(round(v)) for v in values]
    return name, values


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_csv(path, header, rows) -> None:
    fh, close = _open_out(path)
    try:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
    finally:
        if close:
            fh.close()


def cmd_voting(args) -> int:
    config = read_config(args.config)
    _require(config, _MODEL_KEYS, "voting")
    params = _model_params(config)
    gen = build_voting_generator(params)
    dist = stationary_distribution(gen, compute_rg_factors(gen))
    meas = voting_measures(dist)
    _write_csv(args.out, VOTING_CSV_COLUMNS, [voting_csv_row(params, meas)])
    if args.dump_q:
        dump_triplets(gen, args.dump_q)
    if args.dump_pi:
        rows = [[repr(s.n), repr(s.m), repr(s.k), repr(float(v))]
                for s, v in zip(gen.space.states, dist.pi)]
        _write_csv(args.dump_pi, ("n", "m", "k", "pi"), rows)
    return EXIT_OK


def _queue_params(config: dict, subcommand: str) -> QueueParams:
    _require(config, ("lambda", "b"), subcommand)
    if "r1" in config and "r2" in config:
        return QueueParams(lam=config["lambda"], b=config["b"],
                           r1=config["r1"], r2=config["r2"])
    _require(config, _MODEL_KEYS, f"{subcommand} (without direct r1, r2)")
    _, meas = solve_voting(_model_params(config))
    return QueueParams(lam=config["lambda"], b=config["b"], r1=meas.r1, r2=meas.r2)


def cmd_queue(args) -> int:
    config = read_config(args.config)
    epsilon = args.epsilon if args.epsilon is not None else config.get("epsilon", DEFAULT_EPSILON)
    max_iter = args.max_iter if args.max_iter is not None else config.get("max_iter", DEFAULT_MAX_ITER)
    qp = _queue_params(config, "queue")
    if not is_stable(qp):
        print(stability_report(qp), file=sys.stderr)
        return EXIT_UNSTABLE
    sol = queue_stationary(qp, epsilon=epsilon, max_iter=max_iter)
    delta = iteration_delta(qp.blocks(), sol.R)
    print(f"rate matrix converged after {sol.iterations} iterations "
          f"(epsilon={epsilon!r}, residual delta {delta!r})", file=sys.stderr)
    _write_csv(args.out, QUEUE_CSV_COLUMNS, [queue_csv_row(qp, sol)])
    return EXIT_OK


SWEEP_QUEUE_CSV_COLUMNS = tuple(
    list(VOTING_CSV_COLUMNS[:7]) + list(QUEUE_CSV_COLUMNS)
)


def cmd_sweep(args) -> int:
    config = read_config(args.config)
    if not args.sweep:
        raise UsageError("sweep requires at least one --sweep NAME=START:STOP:STEP")
    if len(args.sweep) > 2:
        raise UsageError("at most two --sweep parameters are supported")
    sweeps = [_parse_sweep(s) for s in args.sweep]
    target = config.get("target")
    if target is None:
        target = "queue" if ("lambda" in config or any(n == "lambda" for n, _ in sweeps)) else "voting"
    if target not in ("voting", "queue"):
        raise UsageError(f"config key target must be voting or queue, got {target!r}")
    epsilon = args.epsilon if args.epsilon is not None else config.get("epsilon", DEFAULT_EPSILON)
    max_iter = args.max_iter if args.max_iter is not None else config.get("max_iter", DEFAULT_MAX_ITER)

    grids = [vals for _, vals in sweeps]
    names = [name for name, _ in sweeps]
    points = [(v,) for v in grids[0]]
    if len(grids) == 2:
        points = [(a, b) for a in grids[0] for b in grids[1]]

    rows = []
    for point in points:
        cfg = dict(config)
        for name, value in zip(names, point):
            cfg[name] = value
        if target == "voting":
            _require(cfg, _MODEL_KEYS, "sweep (target voting)")
            params = _model_params(cfg)
            _, meas = solve_voting(params)
            rows.append(voting_csv_row(params, meas))
        else:
            has_model = all(k in cfg for k in _MODEL_KEYS)
            params = _model_params(cfg) if has_model else None
            qp = _queue_params(cfg, "sweep (target queue)")
            head = ([repr(v) for v in (params.mu, params.theta, params.gamma,
                                       params.beta, params.p, params.L, params.N)]
                    if params else [""] * 7)
            if is_stable(qp):
                sol = queue_stationary(qp, epsilon=epsilon, max_iter=max_iter)
                rows.append(head + queue_csv_row(qp, sol))
            else:
                rows.append(head + queue_csv_row(qp, None))
    header = VOTING_CSV_COLUMNS if target == "voting" else SWEEP_QUEUE_CSV_COLUMNS
    _write_csv(args.out, header, rows)
    return EXIT_OK


def _sim_rows(mode: str, result, analytic: dict) -> list:
    rows = []
    any_diverged = bool(result.diverged.any()) if result.diverged is not None else False
    for name in result.quantities:
        samples = result.samples[name]
        for rep in range(result.config.replications):
            div = ""
            if result.diverged is not None:
                div = "true" if bool(result.diverged[rep]) else "false"
            rows.append([mode, name, repr(rep), repr(float(samples[rep])), "", "", "", div])
        est = result.estimate(name)
        ana = analytic.get(name)
        rows.append([
            mode, name, "pooled", repr(est.value), repr(est.stderr),
            "" if ana is None else repr(float(ana)),
            "" if ana is None else repr(est.value - float(ana)),
            ("true" if any_diverged else "false") if result.diverged is not None else "",
        ])
    return rows


def cmd_simulate(args) -> int:
    config = read_config(args.config)
    mode = config.get("mode", "voting")
    if mode not in ("voting", "system", "surrogate"):
        raise UsageError(f"config key mode must be voting, system or surrogate, got {mode!r}")
    seed = args.seed if args.seed is not None else config.get("seed")
    if seed is None:
        raise UsageError("simulate requires a seed (config key seed or --seed)")
    horizon = args.horizon if args.horizon is not None else config.get("horizon")
    if horizon is None:
        raise UsageError("simulate requires a horizon (config key horizon or --horizon)")
    warmup = args.warmup if args.warmup is not None else config.get("warmup", 0.0)
    reps = args.reps if args.reps is not None else config.get("reps", 20)
    cfg = SimConfig(seed=seed, horizon=horizon, warmup=warmup, replications=reps)
    _require(config, _MODEL_KEYS, "simulate")
    params = _model_params(config)

    if mode == "voting":
        result = simulate_voting(params, cfg)
        _, meas = solve_voting(params)
        analytic = {"zeta1": meas.zeta1, "zeta2": meas.zeta2, "below": meas.no_quorum,
                    "voting": meas.voting, "r1": meas.r1, "r2": meas.r2}
    else:
        _require(config, ("lambda", "b"), f"simulate (mode {mode})")
        lam, b = config["lambda"], config["b"]
        _, meas = solve_voting(params)
        qp = QueueParams(lam=lam, b=b, r1=meas.r1, r2=meas.r2)
        service = "exponential" if mode == "surrogate" else "voting"
        result = simulate_system(params, lam, b, cfg, service=service,
                                 rates=(meas.r1, meas.r2),
                                 runaway=config.get("runaway"))
        analytic = {}
        if is_stable(qp):
            sol = queue_stationary(qp)
            analytic = {"eta1": sol.eta1, "eta2": sol.eta2, "throughput": sol.th,
                        "mean_pool": sol.mean_pool()}
    _write_csv(args.out, SIMULATE_CSV_COLUMNS, _sim_rows(mode, result, analytic))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynpbft",
        description="Performance analysis of dynamic-membership PBFT blockchain systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, help="flat key=value config file")
        sp.add_argument("--out", default=None, help="output CSV path (default: stdout)")

    sp = sub.add_parser("voting", help="solve the voting process, emit its measures")
    common(sp)
    sp.add_argument("--dump-pi", default=None, help="write full stationary vector CSV")
    sp.add_argument("--dump-q", default=None, help="write generator as (row col value) triplets")
    sp.set_defaults(func=cmd_voting)

    sp = sub.add_parser("queue", help="solve the transaction queue, emit throughput")
    common(sp)
    sp.add_argument("--epsilon", type=float, default=None,
                    help=f"rate-matrix stopping accuracy (default {DEFAULT_EPSILON})")
    sp.add_argument("--max-iter", type=int, default=None,
                    help=f"rate-matrix iteration cap (default {DEFAULT_MAX_ITER})")
    sp.set_defaults(func=cmd_queue)

    sp = sub.add_parser("sweep", help="evaluate voting or queue measures over a grid")
    common(sp)
    sp.add_argument("--sweep", action="append", default=[],
                    metavar="NAME=START:STOP:STEP",
                    help="parameter grid; repeatable up to twice")
    sp.add_argument("--epsilon", type=float, default=None)
    sp.add_argument("--max-iter", type=int, default=None)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("simulate", help="stochastic verification runs")
    common(sp)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--warmup", type=float, default=None)
    sp.add_argument("--reps", type=int, default=None)
    sp.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StabilityError as exc:
        print(f"unstable queue: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (SolverError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
