"""Analytical SLA design under a stylized service model.

Each (category, borough) pair with arrival rate lam and a service margin
x = C_b*phi - lam > 0 can honor the SLA z = tail_param / x, so the expected
SLA cost of a borough is

    Cost_b(z) = sum_k lam * r * z = tail_param * A_b / X_b,

where A_b = (sum_k sqrt(lam*r))^2 and X_b is the slack budgeted to the
borough, once slack inside a borough is split proportionally to sqrt(lam*r)
(that split is optimal for any objective that is monotone in borough costs).
The solvers below allocate the citywide slack S = total_budget - sum(lam):

- solve_extreme_efficiency minimizes the summed cost (slack ~ sqrt(lam*r)
  citywide),
- solve_extreme_equity minimizes the max borough cost (all borough costs
  equalize),
- solve_weighted minimizes gamma * sum + (1 - gamma) * max by an exact inner
  waterfilling nested in a one-dimensional search over the max-cost bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllRatesZero,
    BoroughWithNoRisk,
    DidNotConverge,
    FractionOutOfRange,
    NonPositiveSLA,
    WrongDimensions,
)
from .model import ProblemInstance, StylizedSolution

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class WeightedObjectiveConfig:
    """Knobs for solve_weighted.

    efficiency_weight is the scalarization weight gamma in [0, 1] (1 = pure
    efficiency, 0 = pure equity). The tolerances are the solver's convergence
    contract: stationarity residual kkt_tol, budget feasibility simplex_tol,
    and a hard iteration cap.
    """

    efficiency_weight: float
    kkt_tol: float = 1e-6
    simplex_tol: float = 1e-12
    max_iterations: int = 100_000

    def __post_init__(self):
        if not (0.0 <= self.efficiency_weight <= 1.0):
            raise FractionOutOfRange(
                f"efficiency_weight must lie in [0, 1], got {self.efficiency_weight}"
            )


def _weights(instance: ProblemInstance) -> np.ndarray:
    return np.sqrt(instance.arrival_rates * instance.risk_ratings)


def borough_cost_stylized(instance: ProblemInstance, slas: np.ndarray) -> np.ndarray:
    """Expected SLA cost per borough: Cost_b = sum_k lam * r * z.

    Pairs with zero arrival rate carry no SLA and contribute nothing; their
    slas entries may be NaN. Active entries must be strictly positive.
    """
    slas = np.asarray(slas, dtype=float)
    if slas.shape != instance.arrival_rates.shape:
        raise WrongDimensions(
            f"slas must have shape {instance.arrival_rates.shape}, got {slas.shape}"
        )
    active = instance.arrival_rates > 0
    if np.any(~(slas[active] > 0)):
        raise NonPositiveSLA("slas must be > 0 wherever arrivals occur")
    term = np.where(active, instance.arrival_rates * instance.risk_ratings, 0.0)
    z = np.where(active, slas, 0.0)
    return (term * z).sum(axis=0)


def _assemble(instance: ProblemInstance, borough_slack: np.ndarray) -> StylizedSolution:
    """Turn per-borough slack into a full solution (split ~ sqrt(lam*r))."""
    lam = instance.arrival_rates
    s = _weights(instance)
    col = s.sum(axis=0)
    x = np.zeros_like(s)
    pos = col > 0
    x[:, pos] = s[:, pos] / col[pos] * borough_slack[pos]
    active = lam > 0
    z = np.full_like(x, np.nan)
    z[active] = instance.tail_param / x[active]
    budgets = borough_slack + lam.sum(axis=0)
    phi = np.zeros_like(x)
    nz = budgets > 0
    phi[:, nz] = (x[:, nz] + lam[:, nz]) / budgets[nz]
    costs = borough_cost_stylized(instance, z)
    return StylizedSolution(
        slas=z,
        gps_weights=phi,
        budgets=budgets,
        slacks=x,
        efficiency_loss=float(costs.sum()),
        equity_loss=float(costs.max()),
    )


def solve_extreme_efficiency(instance: ProblemInstance) -> StylizedSolution:
    """Minimize the summed SLA cost: slack ~ sqrt(lam*r) across all pairs.

    The optimal summed cost is tail_param * (sum sqrt(lam*r))^2 / slack.
    """
    s = _weights(instance)
    total = s.sum()
    if total <= 0:
        raise AllRatesZero("every pair has zero arrival rate")
    borough_slack = instance.slack * s.sum(axis=0) / total
    return _assemble(instance, borough_slack)


def solve_extreme_equity(instance: ProblemInstance) -> StylizedSolution:
    """Minimize the max borough cost: slack ~ A_b, all borough costs equal.

    The shared cost is tail_param * sum_b A_b / slack. Every borough must
    have at least one pair with arrivals, otherwise its cost is pinned at 0
    and the equalizing allocation does not exist.
    """
    s = _weights(instance)
    A = s.sum(axis=0) ** 2
    if np.any(A <= 0):
        idx = int(np.argmin(A))
        raise BoroughWithNoRisk(
            f"borough {instance.boroughs[idx]!r} has no arrivals; "
            "the max-cost objective cannot equalize it"
        )
    borough_slack = instance.slack * A / A.sum()
    return _assemble(instance, borough_slack)


def _waterfill(A: np.ndarray, total: float, bound: float) -> np.ndarray:
    """Minimize sum A_b/X_b subject to sum X = total and A_b/X_b <= bound.

    Exact: boroughs sorted by sqrt(A) descending are pinned at their lower
    bound A_b/bound until the remaining budget supports the unconstrained
    shape X ~ sqrt(A) below the bound.
    """
    sq = np.sqrt(A)
    lower = A / bound
    order = np.argsort(-sq, kind="stable")
    X = np.empty_like(A)
    pinned_budget = 0.0
    free_sq = sq.sum()
    n = A.shape[0]
    for m in range(n + 1):
        rem = total - pinned_budget
        if m == n:
            X[order] = lower[order]
            return X
        theta = rem / free_sq
        # valid split: pinned want theta <= sq/bound, free want theta >= sq/bound
        ok_pinned = m == 0 or theta <= sq[order[m - 1]] / bound * (1 + 1e-12)
        ok_free = theta >= sq[order[m]] / bound * (1 - 1e-12)
        if ok_pinned and ok_free and rem > 0:
            X[order[:m]] = lower[order[:m]]
            free = order[m:]
            X[free] = sq[free] * theta
            return X
        b = order[m]
        pinned_budget += lower[b]
        free_sq -= sq[b]
    X[order] = lower[order]
    return X


def _kkt_residual(A: np.ndarray, X: np.ndarray, total: float, gamma: float) -> float:
    """Stationarity/feasibility residual of X for the reduced allocation problem.

    Multipliers are reconstructed from X: boroughs at the max cost carry the
    equity multipliers (summing to 1 - gamma), the rest must share one budget
    multiplier. All terms are relative, so the residual is scale-free.
    """
    cost = A / X
    t = cost.max()
    capped = cost >= t * (1 - 1e-7)
    ssq = X * X / A
    if capped.all():
        nu = (1.0 - gamma + gamma * capped.sum()) / ssq.sum()
        spread = 0.0
    else:
        ratios = gamma * A[~capped] / (X[~capped] ** 2)
        nu = float(ratios.mean())
        spread = float(np.abs(ratios - nu).max() / max(nu, 1e-300))
    mu = nu * ssq[capped] - gamma
    feas = abs(X.sum() - total) / total
    neg = float(max(0.0, -(mu.min() if mu.size else 0.0)))
    budget_gap = abs(mu.sum() - (1.0 - gamma))
    return max(feas, spread, neg, budget_gap)


def solve_weighted(
    instance: ProblemInstance, config: WeightedObjectiveConfig
) -> StylizedSolution:
    """Minimize gamma * sum_b Cost_b + (1 - gamma) * max_b Cost_b.

    The max is handled through its epigraph bound t: for a fixed t the best
    allocation is an exact waterfilling with lower bounds A_b/t, and the
    bound itself is optimized by golden-section search on [t_min, t_max]
    (t_min = equalized cost, t_max = max cost under the pure-efficiency
    split). The better of the searched point and the interval endpoints is
    returned, so both extremes are recovered exactly.
    """
    gamma = config.efficiency_weight
    s = _weights(instance)
    A_all = s.sum(axis=0) ** 2
    if not np.any(A_all > 0):
        raise AllRatesZero("every pair has zero arrival rate")
    if gamma == 0.0 and np.any(A_all <= 0):
        idx = int(np.argmin(A_all))
        raise BoroughWithNoRisk(
            f"borough {instance.boroughs[idx]!r} has no arrivals; "
            "the max-cost objective cannot equalize it"
        )
    pos = A_all > 0
    A = A_all[pos]
    total = instance.slack

    sq = np.sqrt(A)
    t_min = A.sum() / total
    t_max = float(sq.max() * sq.sum() / total)

    def value(t: float) -> tuple[float, np.ndarray]:
        X = _waterfill(A, total, t)
        cost = A / X
        return gamma * cost.sum() + (1.0 - gamma) * cost.max(), X

    if A.shape[0] == 1 or t_max - t_min <= t_min * 1e-15:
        best_X = _waterfill(A, total, t_max)
    else:
        lo, hi = t_min, t_max
        c1 = hi - _GOLDEN * (hi - lo)
        c2 = lo + _GOLDEN * (hi - lo)
        f1, f2 = value(c1)[0], value(c2)[0]
        iterations = 0
        while hi - lo > 1e-13 * t_max:
            iterations += 1
            if iterations > config.max_iterations:
                raise DidNotConverge(
                    f"bound search exceeded {config.max_iterations} iterations"
                )
            if f1 <= f2:
                hi, c2, f2 = c2, c1, f1
                c1 = hi - _GOLDEN * (hi - lo)
                f1 = value(c1)[0]
            else:
                lo, c1, f1 = c1, c2, f2
                c2 = lo + _GOLDEN * (hi - lo)
                f2 = value(c2)[0]
        candidates = (t_min, t_max, 0.5 * (lo + hi))
        best_X = min((value(t) for t in candidates), key=lambda vx: vx[0])[1]

    residual = _kkt_residual(A, best_X, total, gamma)
    if residual > config.kkt_tol:
        raise DidNotConverge(f"stationarity residual {residual:.3e} > kkt_tol")
    if abs(best_X.sum() - total) > config.simplex_tol * max(1.0, total):
        raise DidNotConverge("allocation left the budget simplex")

    borough_slack = np.zeros_like(A_all)
    borough_slack[pos] = best_X
    return _assemble(instance, borough_slack)


def _require_two_by_one(instance: ProblemInstance) -> tuple[float, float]:
    if instance.n_categories != 1 or instance.n_boroughs != 2:
        raise WrongDimensions(
            "price formulas are defined for one category and two boroughs, "
            f"got {instance.n_categories} x {instance.n_boroughs}"
        )
    s = _weights(instance).ravel()
    hi, lo = float(max(s)), float(min(s))
    return hi, lo


def price_of_equity(instance: ProblemInstance) -> float:
    """Extra summed cost paid to equalize two boroughs:
    tail_param * (sqrt(lam1*r1) - sqrt(lam2*r2))^2 / slack."""
    hi, lo = _require_two_by_one(instance)
    return instance.tail_param * (hi - lo) ** 2 / instance.slack


def price_of_efficiency(instance: ProblemInstance) -> float:
    """Extra max-borough cost paid by the efficiency-optimal split:
    tail_param * sqrt(lam2*r2) * (sqrt(lam1*r1) - sqrt(lam2*r2)) / slack
    with borough 1 the larger sqrt(lam*r)."""
    hi, lo = _require_two_by_one(instance)
    return instance.tail_param * lo * (hi - lo) / instance.slack


@dataclass(frozen=True)
class SolutionReport:
    """Residuals of a StylizedSolution against its instance (report only)."""

    sla_residual: float
    budget_residual: float
    gps_residual: float
    margin_residual: float
    min_active_slack: float
    efficiency_loss_gap: float
    equity_loss_gap: float

    @property
    def max_residual(self) -> float:
        return max(
            self.sla_residual,
            self.budget_residual,
            self.gps_residual,
            self.margin_residual,
            self.efficiency_loss_gap,
            self.equity_loss_gap,
        )


def verify_solution(
    instance: ProblemInstance, solution: StylizedSolution
) -> SolutionReport:
    """Recompute every solution invariant and report the residuals.

    Checks: x * z = tail_param at active pairs, budgets sum to the citywide
    budget, GPS weights are consistent (x = C_b*phi - lam, columns sum to at
    most 1), slacks are positive at active pairs, and the stored losses match
    recomputation. Never raises on a bad solution; callers read the report.
    """
    lam = instance.arrival_rates
    active = lam > 0
    x = solution.slacks
    z = solution.slas
    sla_res = 0.0
    if active.any():
        sla_res = float(
            np.abs(x[active] * z[active] - instance.tail_param).max()
        )
    budget_res = abs(float(solution.budgets.sum()) - instance.total_budget)
    col = solution.gps_weights.sum(axis=0)
    gps_over = float(np.maximum(col - 1.0, 0.0).max()) if col.size else 0.0
    implied = solution.budgets[None, :] * solution.gps_weights - lam
    margin_res = float(np.abs(implied - x).max())
    min_slack = float(x[active].min()) if active.any() else math.inf
    costs = borough_cost_stylized(instance, z)
    eff_gap = abs(float(costs.sum()) - solution.efficiency_loss)
    eq_gap = abs(float(costs.max()) - solution.equity_loss)
    return SolutionReport(
        sla_residual=sla_res,
        budget_residual=budget_res,
        gps_residual=gps_over,
        margin_residual=margin_res,
        min_active_slack=min_slack,
        efficiency_loss_gap=eff_gap,
        equity_loss_gap=eq_gap,
    )
