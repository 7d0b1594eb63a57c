"""Command-line interface.

Subcommands:

* ``slaforge solve``    — analytical SLA design for a rates/risks instance.
* ``slaforge synth``    — synthesize arrival and capacity trace CSVs.
* ``slaforge simulate`` — replay one policy on traces and report its losses.
* ``slaforge search``   — run the Pareto search and write front artifacts.
* ``slaforge evaluate`` — re-score saved policies on (held-out) traces.

Exit codes: 0 success, 2 invalid inputs, 3 a run failed after inputs
validated. Reports are deterministic: rerunning a command on the same
inputs writes byte-identical files.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from datetime import date, timedelta

import numpy as np

from . import __version__, errors, io
from .metrics import MetricsConfig, compute_losses, group_costs
from .model import CityBudgetPolicy, borough_policy_from_vector, build_instance
from .search import (
    SearchConfig,
    _decode_city,
    _vector_digest,
    evaluate_policy_batch,
    policy_dimension,
    run_search,
)
from .simulator import (
    SimulationConfig,
    backend_name,
    derive_city_inspection_fractions,
    generate_synthetic_trace,
    simulate_borough_policy,
    simulate_city_policy,
)
from .simulator._rng import derive_seed
from .stylized import (
    WeightedObjectiveConfig,
    price_of_efficiency,
    price_of_equity,
    solve_weighted,
    verify_solution,
)


def _write_or_print(payload: dict, out: str | None):
    if out:
        io.write_report(out, payload)
    else:
        print(json.dumps(payload, indent=2, sort_keys=True))


def _run_id(*parts) -> str:
    return io.digest_bytes(":".join(str(p) for p in parts).encode())


# ----------------------------------------------------------------- solve

def _solution_payload(instance, gamma, solution, report):
    payload = {
        "gamma": gamma,
        "efficiency_loss": io.jsonable(solution.efficiency_loss),
        "equity_loss": io.jsonable(solution.equity_loss),
        "slas": io.jsonable(solution.slas),
        "gps_weights": io.jsonable(solution.gps_weights),
        "budgets": io.jsonable(solution.budgets),
        "slacks": io.jsonable(solution.slacks),
        "max_residual": io.jsonable(report.max_residual),
    }
    return payload


def cmd_solve(args) -> int:
    cats, bors, rates, risks = io.read_instance_csv(args.instance)
    instance = build_instance(
        cats, bors, rates, risks, args.budget, args.alpha
    )
    if args.sweep is not None:
        gammas = [float(g) for g in np.linspace(0.0, 1.0, args.sweep)]
    else:
        gammas = [args.gamma]
    solutions = []
    for gamma in gammas:
        sol = solve_weighted(instance, WeightedObjectiveConfig(gamma))
        rep = verify_solution(instance, sol)
        solutions.append(_solution_payload(instance, gamma, sol, rep))
    payload = {
        "run_id": _run_id(
            io.digest_file(args.instance), args.budget, args.alpha,
            *(f"{g:.12g}" for g in gammas),
        ),
        "instance_digest": io.digest_file(args.instance),
        "categories": list(cats),
        "boroughs": list(bors),
        "total_budget": args.budget,
        "tail_param": args.alpha,
        "solutions": solutions,
    }
    if instance.n_categories == 1 and instance.n_boroughs == 2:
        payload["price_of_equity"] = io.jsonable(price_of_equity(instance))
        payload["price_of_efficiency"] = io.jsonable(
            price_of_efficiency(instance)
        )
    _write_or_print(payload, args.out)
    return 0


# ----------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    cats, bors, rates, risks = io.read_instance_csv(args.instance)
    instance = build_instance(
        cats, bors, rates, risks, args.budget, args.alpha
    )
    arrivals, capacity = generate_synthetic_trace(
        instance, args.horizon, args.utilization, seed=args.seed
    )
    start = date.fromisoformat(args.start_date)
    os.makedirs(args.out_dir, exist_ok=True)
    a_path = os.path.join(args.out_dir, "arrivals.csv")
    c_path = os.path.join(args.out_dir, "capacity.csv")
    with open(a_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["date", "borough", "category"])
        T, K, B = arrivals.counts.shape
        for t in range(T):
            day = (start + timedelta(days=t)).isoformat()
            for b in range(B):
                for k in range(K):
                    for _ in range(int(arrivals.counts[t, k, b])):
                        writer.writerow([day, bors[b], cats[k]])
    with open(c_path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["date", "inspections"])
        for t in range(capacity.horizon):
            writer.writerow(
                [(start + timedelta(days=t)).isoformat(),
                 int(capacity.capacity[t])]
            )
    print(
        f"wrote {a_path} ({int(arrivals.counts.sum())} incidents) and"
        f" {c_path} ({capacity.horizon} days)"
    )
    return 0


# ------------------------------------------------------------- shared I/O

def _load_traces(args, cfg: io.ToolConfig):
    arrival_rows = io.ingest_arrivals(args.arrivals)
    capacity_rows = io.ingest_capacity(args.capacity)
    arrivals, capacity = io.build_traces(arrival_rows, capacity_rows, cfg.align)
    risk = io.resolve_risk_matrix(arrivals, arrival_rows, cfg.risk_levels)
    return arrivals, capacity, risk


def _sim_config(cfg: io.ToolConfig) -> SimulationConfig:
    return SimulationConfig(**cfg.simulation)


def _metrics_config(cfg: io.ToolConfig) -> MetricsConfig:
    return MetricsConfig(**cfg.metrics)


# -------------------------------------------------------------- simulate

def cmd_simulate(args) -> int:
    cfg = io.read_config(args.config)
    arrivals, capacity, risk = _load_traces(args, cfg)
    sim_cfg = _sim_config(cfg)
    met_cfg = _metrics_config(cfg)
    policies = io.read_policies_csv(
        args.policies, args.policy_class, arrivals.categories,
        arrivals.boroughs,
    )
    if args.policy_id is not None:
        match = [p for p in policies if p[0] == args.policy_id]
        if not match:
            raise errors.MalformedRow(
                f"{args.policies}: no policy with id {args.policy_id!r}"
            )
        pid, vec = match[0]
    else:
        pid, vec = policies[0]
    K, B = arrivals.n_categories, arrivals.n_boroughs
    seed = derive_seed(sim_cfg.seed, "policy", _vector_digest(vec), "0")
    run_cfg = replace(sim_cfg, seed=seed)
    if args.policy_class == "borough":
        policy = borough_policy_from_vector(vec, K, B)
        outcome = simulate_borough_policy(
            arrivals, capacity, policy, run_cfg, backend=args.backend
        )
    else:
        presence = arrivals.counts.sum(axis=0) > 0
        base = _decode_city(vec, K, B, presence)
        target = derive_city_inspection_fractions(
            arrivals, capacity, base.gps
        )
        policy = CityBudgetPolicy(base.gps, target)
        outcome = simulate_city_policy(
            arrivals, capacity, policy, run_cfg, backend=args.backend
        )
    m = compute_losses(outcome, risk, met_cfg)
    fate_counts = np.bincount(outcome.fate, minlength=3)
    payload = {
        "run_id": _run_id(
            io.digest_file(args.arrivals), io.digest_file(args.capacity),
            io.digest_file(args.policies),
            io.digest_bytes((cfg.text or "").encode()), pid,
            args.policy_class, sim_cfg.seed,
        ),
        "arrivals_digest": io.digest_file(args.arrivals),
        "capacity_digest": io.digest_file(args.capacity),
        "policy_id": pid,
        "policy_class": args.policy_class,
        "backend": backend_name(args.backend),
        "categories": list(arrivals.categories),
        "boroughs": list(arrivals.boroughs),
        "horizon": outcome.horizon,
        "efficiency_loss": io.jsonable(m.efficiency_loss),
        "equity_loss": io.jsonable(m.equity_loss),
        "borough_costs": io.jsonable(m.borough_costs),
        "sla": io.jsonable(m.sla),
        "inspected_fraction": io.jsonable(m.inspected_fraction),
        "fates": {
            "backlogged": int(fate_counts[0]),
            "inspected": int(fate_counts[1]),
            "dropped": int(fate_counts[2]),
        },
        "group_costs": io.jsonable(group_costs(outcome, risk, met_cfg)),
        "config_ini": cfg.text,
    }
    _write_or_print(payload, args.out)
    return 0


# ---------------------------------------------------------------- search

def _policy_params(front, i):
    """Normalized parameter dict of front entry i for the policy CSV."""
    policy = front.policy(i)
    if front.policy_class == "borough":
        return {
            "budget_frac": policy.budget_frac,
            "gps": policy.gps,
            "target_frac": policy.target_frac,
        }
    return {"gps": policy.gps}


def cmd_search(args) -> int:
    cfg = io.read_config(args.config)
    arrivals, capacity, risk = _load_traces(args, cfg)
    sim_cfg = _sim_config(cfg)
    met_cfg = _metrics_config(cfg)
    merged = dict(cfg.search)
    for key, value in (
        ("policy_class", args.policy_class),
        ("batch_size", args.batch_size),
        ("iterations", args.iterations),
        ("seeds_per_policy", args.seeds_per_policy),
        ("sampler", args.sampler),
        ("seed", args.seed),
    ):
        if value is not None:
            merged[key] = value
    search_cfg = SearchConfig(**merged)
    front = run_search(
        arrivals, capacity, risk, search_cfg, met_cfg, sim_cfg,
        backend=args.backend,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    ids = [f"p{i:03d}" for i in range(len(front.entries))]

    with open(
        os.path.join(args.out_dir, "pareto.csv"), "w", newline="",
        encoding="utf-8",
    ) as handle:
        writer = csv.writer(handle)
        writer.writerow(["policy_id", "efficiency_loss", "equity_loss"])
        for pid, entry in zip(ids, front.entries):
            writer.writerow([
                pid,
                io.format_value(entry.efficiency_loss),
                io.format_value(entry.equity_loss),
            ])
    io.write_policies_csv(
        os.path.join(args.out_dir, "front_policies.csv"),
        [(pid, _policy_params(front, i)) for i, pid in enumerate(ids)],
        arrivals.categories,
        arrivals.boroughs,
    )
    with open(
        os.path.join(args.out_dir, "hypervolume.csv"), "w", newline="",
        encoding="utf-8",
    ) as handle:
        writer = csv.writer(handle)
        writer.writerow(["iteration", "hypervolume"])
        for i, hv in enumerate(front.hypervolume_history):
            writer.writerow([i, io.format_value(hv)])

    a_digest = io.digest_file(args.arrivals)
    c_digest = io.digest_file(args.capacity)
    cfg_digest = io.digest_bytes((cfg.text or "").encode())
    payload = {
        "run_id": _run_id(
            a_digest, c_digest, cfg_digest, search_cfg.seed,
            search_cfg.policy_class, search_cfg.sampler,
            search_cfg.batch_size, search_cfg.iterations,
            search_cfg.seeds_per_policy,
        ),
        "arrivals_digest": a_digest,
        "capacity_digest": c_digest,
        "backend": backend_name(args.backend),
        "policy_class": search_cfg.policy_class,
        "sampler": search_cfg.sampler,
        "batch_size": search_cfg.batch_size,
        "iterations": search_cfg.iterations,
        "seeds_per_policy": search_cfg.seeds_per_policy,
        "seed": search_cfg.seed,
        "evaluations": front.evaluations,
        "reference_point": io.jsonable(front.reference_point),
        "hypervolume": io.jsonable(front.hypervolume_history),
        "front": [
            {
                "policy_id": pid,
                "efficiency_loss": io.jsonable(entry.efficiency_loss),
                "equity_loss": io.jsonable(entry.equity_loss),
            }
            for pid, entry in zip(ids, front.entries)
        ],
        "config_ini": cfg.text,
    }
    io.write_report(os.path.join(args.out_dir, "report.json"), payload)
    print(
        f"front of {len(front.entries)} policies after {front.evaluations}"
        f" evaluations; artifacts in {args.out_dir}"
    )
    return 0


# -------------------------------------------------------------- evaluate

def cmd_evaluate(args) -> int:
    cfg = io.read_config(args.config)
    arrivals, capacity, risk = _load_traces(args, cfg)
    sim_cfg = _sim_config(cfg)
    met_cfg = _metrics_config(cfg)
    policies = io.read_policies_csv(
        args.policies, args.policy_class, arrivals.categories,
        arrivals.boroughs,
    )
    vectors = np.stack([vec for _, vec in policies])
    g, f = evaluate_policy_batch(
        vectors, arrivals, capacity, risk, args.policy_class,
        met_cfg, sim_cfg, seeds_per_policy=sim_cfg_spp(cfg),
        backend=args.backend,
    )
    dim = policy_dimension(
        args.policy_class, arrivals.n_categories, arrivals.n_boroughs
    )
    bg, bf = evaluate_policy_batch(
        np.ones((1, dim)), arrivals, capacity, risk, args.policy_class,
        met_cfg, sim_cfg, seeds_per_policy=sim_cfg_spp(cfg),
        backend=args.backend,
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        g_ratio = g / bg[0]
        f_ratio = f / bf[0]
    payload = {
        "run_id": _run_id(
            io.digest_file(args.arrivals), io.digest_file(args.capacity),
            io.digest_file(args.policies),
            io.digest_bytes((cfg.text or "").encode()), args.policy_class,
            sim_cfg.seed,
        ),
        "arrivals_digest": io.digest_file(args.arrivals),
        "capacity_digest": io.digest_file(args.capacity),
        "policies_digest": io.digest_file(args.policies),
        "policy_class": args.policy_class,
        "backend": backend_name(args.backend),
        "baseline": {
            "efficiency_loss": io.jsonable(bg[0]),
            "equity_loss": io.jsonable(bf[0]),
        },
        "policies": [
            {
                "policy_id": pid,
                "efficiency_loss": io.jsonable(g[i]),
                "equity_loss": io.jsonable(f[i]),
                "efficiency_ratio": io.jsonable(g_ratio[i]),
                "equity_ratio": io.jsonable(f_ratio[i]),
            }
            for i, (pid, _) in enumerate(policies)
        ],
        "config_ini": cfg.text,
    }
    _write_or_print(payload, args.out)
    return 0


def sim_cfg_spp(cfg: io.ToolConfig) -> int:
    """seeds_per_policy for evaluate comes from the [search] section."""
    return int(cfg.search.get("seeds_per_policy", 1))


# ----------------------------------------------------------------- parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="slaforge",
        description="Design and stress-test inspection service-level"
        " agreements: analytical trade-off solves, trace-driven simulation,"
        " and Pareto policy search.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_backend(p):
        p.add_argument(
            "--backend",
            choices=["python", "compiled"],
            default=None,
            help="force a simulation backend (default: compiled when built)",
        )

    def add_config(p):
        p.add_argument("--config", default=None, help="INI config file")

    def add_traces(p):
        p.add_argument("--arrivals", required=True, help="arrivals CSV")
        p.add_argument("--capacity", required=True, help="capacity CSV")

    def add_class(p):
        p.add_argument(
            "--class",
            dest="policy_class",
            choices=["borough", "city"],
            default="borough",
            help="policy family (default borough)",
        )

    p = sub.add_parser("solve", help="analytical SLA design")
    p.add_argument("--instance", required=True, help="instance CSV")
    p.add_argument("--budget", type=float, required=True, help="total budget")
    p.add_argument(
        "--alpha", type=float, default=1.0, help="delay tail parameter"
    )
    group = p.add_mutually_exclusive_group()
    group.add_argument(
        "--gamma", type=float, default=1.0,
        help="efficiency weight in [0, 1] (default 1)",
    )
    group.add_argument(
        "--sweep", type=int, default=None,
        help="solve N evenly spaced gammas from 0 to 1",
    )
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("synth", help="synthesize trace CSVs")
    p.add_argument("--instance", required=True, help="instance CSV")
    p.add_argument("--budget", type=float, required=True, help="total budget")
    p.add_argument(
        "--alpha", type=float, default=1.0, help="delay tail parameter"
    )
    p.add_argument("--horizon", type=int, required=True, help="days")
    p.add_argument(
        "--utilization", type=float, default=1.0,
        help="capacity scale relative to the budget (default 1)",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--start-date", default="2024-01-01", help="ISO date of day 0"
    )
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="replay one policy on traces")
    add_traces(p)
    p.add_argument("--policies", required=True, help="policy CSV")
    p.add_argument(
        "--policy-id", default=None,
        help="which policy to run (default: first in the file)",
    )
    add_class(p)
    add_config(p)
    add_backend(p)
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("search", help="Pareto policy search")
    add_traces(p)
    add_class(p)
    p.set_defaults(policy_class=None)
    add_config(p)
    add_backend(p)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--seeds-per-policy", type=int, default=None)
    p.add_argument(
        "--sampler", choices=["sobol_random", "evolutionary"], default=None
    )
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="re-score saved policies on traces")
    add_traces(p)
    p.add_argument("--policies", required=True, help="policy CSV")
    add_class(p)
    add_config(p)
    add_backend(p)
    p.add_argument("--out", default=None, help="report path (default stdout)")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except errors.InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except errors.ComputeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
