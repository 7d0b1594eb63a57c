"""Trace-driven simulation of inspection scheduling policies.

simulate_borough_policy replays an arrival trace against a daily capacity
trace under a BoroughBudgetPolicy: capacity is split across boroughs and
categories by seeded multinomials in the policy weights, queues are served
earliest-first up to a tunable FCFS violation, and on review days each
backlogged incident survives with its category's inspection fraction.

simulate_city_policy replays the same traces under a CityBudgetPolicy:
incidents are thinned at entry with the pair's inspection fraction and one
citywide split serves all backlogged pairs; there is no review step.

The random stream and its consumption order are fixed (see _core_py), so a
run is reproducible from its seed on either backend.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import (
    DimensionMismatch,
    FractionOutOfRange,
    TraceMisaligned,
    ZeroArrivalPair,
)
from ..model import ArrivalTrace, BoroughBudgetPolicy, CapacityTrace, CityBudgetPolicy
from . import _core_py
from .backend import kernel

FATE_BACKLOG = _core_py.FATE_BACKLOG
FATE_INSPECTED = _core_py.FATE_INSPECTED
FATE_DROPPED = _core_py.FATE_DROPPED


@dataclass(frozen=True)
class SimulationConfig:
    """Run parameters.

    review_period is the drop-step cadence in days (borough policy only).
    fcfs_violation is rho in [0, 1]: the served window reaches past the n
    earliest incidents by ceil(rho * (backlog - n)); 0 is strict FCFS.
    trace_repeats concatenates the input traces end to end.
    """

    review_period: int = 7
    fcfs_violation: float = 0.0
    seed: int = 0
    trace_repeats: int = 1

    def __post_init__(self):
        if int(self.review_period) < 1:
            raise FractionOutOfRange("review_period must be >= 1")
        if not (0.0 <= float(self.fcfs_violation) <= 1.0):
            raise FractionOutOfRange("fcfs_violation must lie in [0, 1]")
        if int(self.trace_repeats) < 1:
            raise FractionOutOfRange("trace_repeats must be >= 1")


@dataclass(eq=False)
class SimulationOutcome:
    """Per-incident results of one simulation run.

    Arrays are aligned by incident: fate (0 backlogged at horizon end,
    1 inspected, 2 dropped) and event_day (-1 for backlogged incidents,
    else the inspection or drop day, 0-based). counts aggregates arrivals
    per (category, borough) over the whole run.
    """

    categories: tuple[str, ...]
    boroughs: tuple[str, ...]
    horizon: int
    counts: np.ndarray
    arrival_day: np.ndarray
    category_index: np.ndarray
    borough_index: np.ndarray
    region_names: tuple[str, ...]
    region_index: np.ndarray
    fate: np.ndarray
    event_day: np.ndarray

    @property
    def n_incidents(self) -> int:
        return self.arrival_day.shape[0]

    def delays(self, category: int | None = None, borough: int | None = None):
        """Delays (inspect day - arrival day) of inspected incidents."""
        mask = self.fate == FATE_INSPECTED
        if category is not None:
            mask &= self.category_index == category
        if borough is not None:
            mask &= self.borough_index == borough
        return (self.event_day[mask] - self.arrival_day[mask]).astype(np.int64)

    def inspected_counts(self) -> np.ndarray:
        """Inspections per (category, borough)."""
        K, B = len(self.categories), len(self.boroughs)
        out = np.zeros((K, B), dtype=np.int64)
        mask = self.fate == FATE_INSPECTED
        np.add.at(out, (self.category_index[mask], self.borough_index[mask]), 1)
        return out


def _check_alignment(arrivals: ArrivalTrace, capacity: CapacityTrace):
    if arrivals.horizon != capacity.horizon:
        raise TraceMisaligned(
            f"arrival horizon {arrivals.horizon} != capacity horizon "
            f"{capacity.horizon}"
        )


def _check_policy_shape(arrivals: ArrivalTrace, policy):
    if (
        policy.n_categories != arrivals.n_categories
        or policy.n_boroughs != arrivals.n_boroughs
    ):
        raise TraceMisaligned(
            f"policy shape ({policy.n_categories}, {policy.n_boroughs}) does "
            f"not match trace shape ({arrivals.n_categories}, "
            f"{arrivals.n_boroughs})"
        )


def _incident_table(arrivals: ArrivalTrace, repeats: int):
    """Per-incident (day, queue, category, borough, region) arrays, sorted by
    day with stable within-day order; queue id is borough-major."""
    T, K, B = arrivals.counts.shape
    if arrivals.record_day is None:
        flat = arrivals.counts.transpose(0, 2, 1).ravel()  # (T, B, K) order
        day_grid = np.repeat(np.arange(T, dtype=np.int64), B * K)
        bor_grid = np.tile(np.repeat(np.arange(B, dtype=np.int64), K), T)
        cat_grid = np.tile(np.tile(np.arange(K, dtype=np.int64), B), T)
        day = np.repeat(day_grid, flat)
        bor = np.repeat(bor_grid, flat)
        cat = np.repeat(cat_grid, flat)
        region_names = arrivals.boroughs
        region = bor.copy()
    else:
        order = np.argsort(arrivals.record_day, kind="stable")
        day = arrivals.record_day[order]
        cat = arrivals.record_category[order]
        bor = arrivals.record_borough[order]
        if arrivals.record_region is None:
            region_names = arrivals.boroughs
            region = bor.copy()
        else:
            labels = [arrivals.record_region[i] for i in order]
            region_names = tuple(dict.fromkeys(labels))
            lookup = {name: i for i, name in enumerate(region_names)}
            region = np.array([lookup[v] for v in labels], dtype=np.int64)
    if repeats > 1:
        day = np.concatenate([day + r * T for r in range(repeats)])
        cat = np.tile(cat, repeats)
        bor = np.tile(bor, repeats)
        region = np.tile(region, repeats)
    queue = bor * K + cat
    return day, queue, cat, bor, region_names, region


def _outcome(arrivals, repeats, table, fate, eday) -> SimulationOutcome:
    day, _, cat, bor, region_names, region = table
    K, B = arrivals.n_categories, arrivals.n_boroughs
    counts = np.zeros((K, B), dtype=np.int64)
    np.add.at(counts, (cat, bor), 1)
    return SimulationOutcome(
        categories=arrivals.categories,
        boroughs=arrivals.boroughs,
        horizon=arrivals.horizon * repeats,
        counts=counts,
        arrival_day=day,
        category_index=cat,
        borough_index=bor,
        region_names=region_names,
        region_index=region,
        fate=fate,
        event_day=eday,
    )


def simulate_borough_policy(
    arrivals: ArrivalTrace,
    capacity: CapacityTrace,
    policy: BoroughBudgetPolicy,
    config: SimulationConfig,
    backend: str | None = None,
) -> SimulationOutcome:
    """Run the borough-budget scheduling process over the traces."""
    _check_alignment(arrivals, capacity)
    _check_policy_shape(arrivals, policy)
    repeats = int(config.trace_repeats)
    table = _incident_table(arrivals, repeats)
    day, queue = table[0], table[1]
    cap = np.tile(capacity.capacity, repeats)
    core = kernel(backend)
    fate, eday = core.run_borough(
        day,
        queue,
        arrivals.horizon * repeats,
        arrivals.n_categories,
        arrivals.n_boroughs,
        cap,
        np.ascontiguousarray(policy.budget_frac, dtype=np.float64),
        np.ascontiguousarray(policy.gps.T, dtype=np.float64),
        np.ascontiguousarray(policy.target_frac.T, dtype=np.float64),
        int(config.review_period),
        float(config.fcfs_violation),
        int(config.seed),
    )
    return _outcome(arrivals, repeats, table, fate, eday)


def simulate_city_policy(
    arrivals: ArrivalTrace,
    capacity: CapacityTrace,
    policy: CityBudgetPolicy,
    config: SimulationConfig,
    backend: str | None = None,
) -> SimulationOutcome:
    """Run the city-budget scheduling process over the traces."""
    _check_alignment(arrivals, capacity)
    _check_policy_shape(arrivals, policy)
    if policy.target_frac is None:
        raise DimensionMismatch(
            "city policy needs target_frac; derive it with "
            "derive_city_inspection_fractions"
        )
    repeats = int(config.trace_repeats)
    table = _incident_table(arrivals, repeats)
    day, queue = table[0], table[1]
    cap = np.tile(capacity.capacity, repeats)
    core = kernel(backend)
    fate, eday = core.run_city(
        day,
        queue,
        arrivals.horizon * repeats,
        arrivals.n_categories,
        arrivals.n_boroughs,
        cap,
        np.ascontiguousarray(policy.gps.T, dtype=np.float64),
        np.ascontiguousarray(policy.target_frac.T, dtype=np.float64),
        float(config.fcfs_violation),
        int(config.seed),
    )
    return _outcome(arrivals, repeats, table, fate, eday)


def derive_city_inspection_fractions(
    arrivals: ArrivalTrace,
    capacity: CapacityTrace,
    gps: np.ndarray,
) -> np.ndarray:
    """Inspection fractions that spend the capacity budget in GPS proportion.

    Each pair's capacity share is gps * total capacity; its fraction is that
    share over its total arrivals, clamped to 1. Freed-up capacity from
    clamped pairs is re-shared over the others (renormalized GPS weights)
    until no new pair clamps. Pairs with zero GPS weight get fraction 0;
    a pair with positive weight but no arrivals has no finite fraction.
    """
    _check_alignment(arrivals, capacity)
    gps = np.asarray(gps, dtype=float)
    K, B = arrivals.n_categories, arrivals.n_boroughs
    if gps.shape != (K, B):
        raise DimensionMismatch(f"gps must be ({K}, {B}), got {gps.shape}")
    totals = arrivals.counts.sum(axis=0).astype(float)
    total_capacity = float(capacity.capacity.sum())
    positive = gps > 0
    starved = positive & (totals <= 0)
    if np.any(starved):
        k, b = np.argwhere(starved)[0]
        raise ZeroArrivalPair(
            f"pair ({arrivals.categories[k]!r}, {arrivals.boroughs[b]!r}) has "
            "positive weight but no arrivals"
        )
    fractions = np.zeros((K, B), dtype=float)
    open_mask = positive.copy()
    budget = total_capacity
    while True:
        weight = gps[open_mask].sum()
        if weight <= 0 or budget <= 0:
            fractions[open_mask] = 0.0
            break
        share = gps / weight * budget
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.where(open_mask, share / totals, 0.0)
        newly = open_mask & (frac > 1.0)
        if not newly.any():
            fractions[open_mask] = np.minimum(frac[open_mask], 1.0)
            break
        fractions[newly] = 1.0
        budget -= float(totals[newly].sum())
        open_mask &= ~newly
    return fractions
