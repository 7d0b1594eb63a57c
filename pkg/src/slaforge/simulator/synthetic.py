"""Synthetic trace generation from a problem instance."""

from __future__ import annotations

import numpy as np

from ..errors import FractionOutOfRange
from ..model import ArrivalTrace, CapacityTrace, ProblemInstance


def generate_synthetic_trace(
    instance: ProblemInstance,
    horizon: int,
    utilization: float = 1.0,
    seed: int = 0,
) -> tuple[ArrivalTrace, CapacityTrace]:
    """Draw iid daily Poisson arrivals and capacity from the instance rates.

    Arrivals for pair (k, b) are Poisson(arrival_rates[k, b]) per day;
    capacity is Poisson(total_budget * utilization) per day. Deterministic
    given the seed.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise FractionOutOfRange("horizon must be >= 1")
    utilization = float(utilization)
    if utilization <= 0:
        raise FractionOutOfRange("utilization must be > 0")
    rng = np.random.default_rng(seed)
    K, B = instance.n_categories, instance.n_boroughs
    counts = rng.poisson(
        lam=np.broadcast_to(instance.arrival_rates, (horizon, K, B))
    ).astype(np.int64)
    capacity = rng.poisson(
        lam=instance.total_budget * utilization, size=horizon
    ).astype(np.int64)
    arrivals = ArrivalTrace(instance.categories, instance.boroughs, counts)
    return arrivals, CapacityTrace(capacity)
