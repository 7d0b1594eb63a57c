#!/usr/bin/env python3
"""Throughput benchmark: pure-Python simulator kernel vs the compiled twin.

Both backends consume the random stream identically and produce bit-identical
outputs; this script measures the wall-clock gap on a loaded synthetic
environment and verifies the agreement on the way.

Usage: python3 benchmarks/bench_backends.py [--horizon N] [--repeats R]
"""

import argparse
import time

import numpy as np

from slaforge.model import BoroughBudgetPolicy, CityBudgetPolicy, build_instance
from slaforge.simulator import (
    SimulationConfig,
    compiled_available,
    derive_city_inspection_fractions,
    generate_synthetic_trace,
    simulate_borough_policy,
    simulate_city_policy,
)


def build_environment(horizon):
    instance = build_instance(
        ["hazard", "prune", "other"],
        ["east", "west", "north"],
        [[2.0, 1.0, 0.5], [1.5, 2.5, 1.0], [0.5, 0.5, 2.0]],
        [[10.0, 10.0, 10.0], [4.0, 4.0, 4.0], [6.0, 6.0, 6.0]],
        13.0,
        3.0,
    )
    arrivals, capacity = generate_synthetic_trace(
        instance, horizon=horizon, utilization=0.9, seed=11
    )
    gps = np.full((3, 3), 1.0 / 3.0)
    borough = BoroughBudgetPolicy(
        np.array([0.4, 0.35, 0.25]), gps, np.full((3, 3), 0.9)
    )
    city_gps = np.full((3, 3), 1.0 / 9.0)
    fractions = derive_city_inspection_fractions(arrivals, capacity, city_gps)
    city = CityBudgetPolicy(city_gps, fractions)
    config = SimulationConfig(review_period=7, fcfs_violation=0.3, seed=99)
    return arrivals, capacity, borough, city, config


def best_time(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=int, default=20_000)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    arrivals, capacity, borough, city, config = build_environment(args.horizon)
    n_incidents = int(arrivals.counts.sum())
    print(
        f"environment: {args.horizon} days, {n_incidents:,} incidents, "
        f"3 categories x 3 boroughs"
    )
    if not compiled_available():
        print("compiled core not built; benchmarking the python backend only")

    runs = [
        ("borough policy", simulate_borough_policy, borough),
        ("city policy", simulate_city_policy, city),
    ]
    for label, simulate, policy in runs:
        print(f"{label}:")
        results = {}
        backends = ["python"] + (["compiled"] if compiled_available() else [])
        for backend in backends:
            elapsed, out = best_time(
                lambda: simulate(
                    arrivals, capacity, policy, config, backend=backend
                ),
                args.repeats,
            )
            results[backend] = (elapsed, out)
            rate = args.horizon / elapsed
            print(f"  {backend:<9}: {elapsed:8.3f} s  ({rate:,.0f} days/s)")
        if len(results) == 2:
            py_t, py_out = results["python"]
            cy_t, cy_out = results["compiled"]
            same = np.array_equal(py_out.fate, cy_out.fate) and np.array_equal(
                py_out.event_day, cy_out.event_day
            )
            print(
                f"  speedup {py_t / cy_t:.1f}x, outputs bit-identical: {same}"
            )


if __name__ == "__main__":
    main()
