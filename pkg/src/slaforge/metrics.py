"""Loss metrics computed from simulation outcomes.

The efficiency loss of a policy is the total risk-weighted cost of its
outcome; the equity loss measures how unevenly that cost falls across
boroughs. Both are computed from the same per-pair summaries:

* the empirical service-level agreement ``z_hat[k, b]``: the nearest-rank
  percentile of the delays of inspected incidents in category k, borough b;
* the inspection fraction ``p_hat[k, b]``: inspected incidents over total
  arrivals (incidents dropped or still waiting when the horizon ends count
  as not inspected).

A borough's cost charges every arrival its risk rating, scaled by the
empirical SLA when inspected and by the (much larger) miss cost when not:

    cost_b = sum_k N[k, b] * r[k, b] * (p_hat * z_hat + drop_cost * (1 - p_hat))

Efficiency loss is the sum of borough costs. Equity loss comes in two kinds:

* ``"range"``: per category, the spread across boroughs of the risk-weighted
  SLA ``r * z_hat``, summed over categories. Pairs with no arrivals are
  skipped; a pair with arrivals but no inspections counts at the horizon
  length (the worst delay the trace can witness), so starving a borough
  cannot shrink the spread.
* ``"max_cost"``: the largest borough cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import errors
from .simulator import FATE_INSPECTED
from .simulator.engine import SimulationOutcome

_EQUITY_KINDS = ("range", "max_cost")


@dataclass(frozen=True)
class MetricsConfig:
    """Knobs for turning an outcome into losses.

    sla_percentile: percentile (in (0, 100]) of inspected delays used as the
        empirical SLA.
    drop_cost: days-equivalent penalty per unit risk for an arrival that was
        not inspected; must be positive.
    equity_kind: "range" or "max_cost", see module docstring.
    """

    sla_percentile: float = 50.0
    drop_cost: float = 100.0
    equity_kind: str = "range"

    def __post_init__(self):
        if not (0.0 < self.sla_percentile <= 100.0):
            raise errors.FractionOutOfRange(
                f"sla_percentile must lie in (0, 100], got {self.sla_percentile}"
            )
        if not (self.drop_cost > 0.0):
            raise errors.FractionOutOfRange(
                f"drop_cost must be positive, got {self.drop_cost}"
            )
        if self.equity_kind not in _EQUITY_KINDS:
            raise errors.FractionOutOfRange(
                f"equity_kind must be one of {_EQUITY_KINDS}, got"
                f" {self.equity_kind!r}"
            )


@dataclass(eq=False)
class PolicyMetrics:
    """Per-pair summaries and the two scalar losses for one outcome."""

    sla: np.ndarray  # (K, B), NaN where nothing was inspected
    inspected_fraction: np.ndarray  # (K, B), NaN where nothing arrived
    borough_costs: np.ndarray  # (B,)
    efficiency_loss: float
    equity_loss: float
    config: MetricsConfig = field(repr=False)


def _nearest_rank(sorted_delays: np.ndarray, percentile: float) -> float:
    n = sorted_delays.shape[0]
    idx = math.ceil(percentile * n / 100.0) - 1
    if idx < 0:
        idx = 0
    return float(sorted_delays[idx])


def empirical_sla(outcome: SimulationOutcome, percentile: float = 50.0) -> np.ndarray:
    """Nearest-rank percentile of inspected delays, per (category, borough).

    Returns a (K, B) array; pairs with no inspected incidents are NaN.
    """
    if not (0.0 < percentile <= 100.0):
        raise errors.FractionOutOfRange(
            f"percentile must lie in (0, 100], got {percentile}"
        )
    K = len(outcome.categories)
    B = len(outcome.boroughs)
    z = np.full((K, B), np.nan)
    inspected = outcome.fate == FATE_INSPECTED
    delays = outcome.event_day[inspected] - outcome.arrival_day[inspected]
    cats = outcome.category_index[inspected]
    bors = outcome.borough_index[inspected]
    pair = cats * B + bors
    order = np.argsort(pair, kind="stable")
    pair = pair[order]
    delays = delays[order]
    bounds = np.searchsorted(pair, np.arange(K * B + 1))
    for p in range(K * B):
        lo, hi = bounds[p], bounds[p + 1]
        if hi > lo:
            z[p // B, p % B] = _nearest_rank(np.sort(delays[lo:hi]), percentile)
    return z


def inspection_fractions(outcome: SimulationOutcome) -> np.ndarray:
    """Fraction of arrivals inspected, per (category, borough).

    Returns a (K, B) array; pairs with no arrivals are NaN.
    """
    K = len(outcome.categories)
    B = len(outcome.boroughs)
    inspected = np.zeros((K, B), dtype=np.int64)
    mask = outcome.fate == FATE_INSPECTED
    np.add.at(inspected, (outcome.category_index[mask], outcome.borough_index[mask]), 1)
    totals = outcome.counts
    with np.errstate(invalid="ignore"):
        frac = np.where(totals > 0, inspected / np.maximum(totals, 1), np.nan)
    return frac


def compute_losses(
    outcome: SimulationOutcome,
    risk_ratings: np.ndarray,
    config: MetricsConfig | None = None,
) -> PolicyMetrics:
    """Efficiency and equity losses of one simulated outcome."""
    config = config or MetricsConfig()
    K = len(outcome.categories)
    B = len(outcome.boroughs)
    risk = np.asarray(risk_ratings, dtype=float)
    if risk.shape != (K, B):
        raise errors.DimensionMismatch(
            f"risk_ratings shape {risk.shape} does not match outcome ({K}, {B})"
        )
    if (risk <= 0).any():
        raise errors.NonPositiveRisk("risk ratings must be positive")

    z_hat = empirical_sla(outcome, config.sla_percentile)
    p_hat = inspection_fractions(outcome)
    totals = outcome.counts.astype(float)

    present = totals > 0
    p_fill = np.where(present, p_hat, 0.0)
    # pairs with arrivals but nothing inspected: SLA term vanishes (p_hat=0)
    z_fill = np.where(np.isnan(z_hat), 0.0, z_hat)
    per_pair = totals * risk * (p_fill * z_fill + config.drop_cost * (1.0 - p_fill))
    per_pair = np.where(present, per_pair, 0.0)
    borough_costs = per_pair.sum(axis=0)
    efficiency_loss = float(borough_costs.sum())

    if config.equity_kind == "max_cost":
        equity_loss = float(borough_costs.max()) if B else 0.0
    else:
        # starved-but-present pairs count at the horizon length
        z_eq = np.where(present & np.isnan(z_hat), float(outcome.horizon), z_hat)
        weighted = risk * z_eq
        equity_loss = 0.0
        for k in range(K):
            row = weighted[k][present[k]]
            if row.size:
                equity_loss += float(row.max() - row.min())

    return PolicyMetrics(
        sla=z_hat,
        inspected_fraction=p_hat,
        borough_costs=borough_costs,
        efficiency_loss=efficiency_loss,
        equity_loss=equity_loss,
        config=config,
    )


def group_costs(
    outcome: SimulationOutcome,
    risk_ratings: np.ndarray,
    config: MetricsConfig | None = None,
) -> dict[str, float]:
    """Risk-weighted cost per region label.

    Each incident contributes its pair's risk rating times the pair's
    empirical SLA if inspected, or times the miss cost if not. When the trace
    carries no region labels, boroughs serve as the regions; summed that way
    the values match ``PolicyMetrics.borough_costs`` exactly.
    """
    config = config or MetricsConfig()
    K = len(outcome.categories)
    B = len(outcome.boroughs)
    risk = np.asarray(risk_ratings, dtype=float)
    if risk.shape != (K, B):
        raise errors.DimensionMismatch(
            f"risk_ratings shape {risk.shape} does not match outcome ({K}, {B})"
        )
    z_hat = empirical_sla(outcome, config.sla_percentile)
    z_fill = np.where(np.isnan(z_hat), 0.0, z_hat)
    pair_risk = risk[outcome.category_index, outcome.borough_index]
    pair_sla = z_fill[outcome.category_index, outcome.borough_index]
    inspected = outcome.fate == FATE_INSPECTED
    per_incident = np.where(
        inspected, pair_risk * pair_sla, pair_risk * config.drop_cost
    )
    names = outcome.region_names
    idx = outcome.region_index
    sums = np.zeros(len(names))
    np.add.at(sums, idx, per_incident)
    return {name: float(sums[i]) for i, name in enumerate(names)}
