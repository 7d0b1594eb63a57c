"""Problem data types shared by the analytical solvers, the simulator, and the search.

Matrix convention: every (category, borough) quantity is a float array of shape
(K, B), rows in canonical category order and columns in canonical borough order.
Canonical order is fixed by the `categories` / `boroughs` sequences handed to the
constructors and never re-sorted.

Policy vector convention (used by the search and the CSV round-trip): a borough
budget policy flattens to ``B + K*B + K*B`` raw entries,

    [budget_frac (B)] + [gps, borough-major (B*K)] + [target_frac, borough-major (B*K)]

and a city budget policy to ``K*B`` raw GPS entries (borough-major). Raw weight
groups are normalized proportionally; an all-zero group maps to uniform weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    FractionOutOfRange,
    NegativeCapacity,
    NegativeEntry,
    NonPositiveRisk,
    NonPositiveSlack,
    NonPositiveTail,
)

_SUM_TOL = 1e-9


def _as_matrix(values, K: int, B: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (K, B):
        raise DimensionMismatch(
            f"{name} must have shape ({K}, {B}), got {arr.shape}"
        )
    return arr


def _check_names(names: Sequence[str], what: str) -> tuple[str, ...]:
    out = tuple(str(n) for n in names)
    if not out:
        raise DimensionMismatch(f"need at least one {what}")
    if len(set(out)) != len(out):
        raise DimensionMismatch(f"duplicate {what} names: {out}")
    return out


def normalize_weights(raw: np.ndarray) -> np.ndarray:
    """Proportional normalization of one nonnegative weight group.

    An all-zero group maps to uniform weights, so the mapping is total on
    nonnegative inputs. Scale-invariant and idempotent up to float rounding.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.size == 0:
        return raw.copy()
    if np.any(raw < 0):
        raise NegativeEntry("weights must be nonnegative")
    total = float(raw.sum())
    if total <= 0.0:
        return np.full(raw.shape, 1.0 / raw.size)
    return raw / total


@dataclass(eq=False)
class ProblemInstance:
    """A citywide inspection design problem.

    arrival_rates and risk_ratings are (K, B); total_budget is the citywide
    daily inspection budget C and tail_param the SLA tail exponent (the larger,
    the stricter the tail guarantee priced into every SLA).
    """

    categories: tuple[str, ...]
    boroughs: tuple[str, ...]
    arrival_rates: np.ndarray
    risk_ratings: np.ndarray
    total_budget: float
    tail_param: float

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    @property
    def n_boroughs(self) -> int:
        return len(self.boroughs)

    @property
    def slack(self) -> float:
        """Budget left after covering the total arrival rate."""
        return float(self.total_budget - self.arrival_rates.sum())


def build_instance(
    categories: Sequence[str],
    boroughs: Sequence[str],
    arrival_rates,
    risk_ratings,
    total_budget: float,
    tail_param: float,
) -> ProblemInstance:
    """Validate and assemble a ProblemInstance.

    Requires elementwise arrival_rates >= 0, risk_ratings > 0, a strictly
    positive tail parameter, and total_budget strictly above the summed
    arrival rates (otherwise no stable SLA exists).
    """
    cats = _check_names(categories, "category")
    bors = _check_names(boroughs, "borough")
    K, B = len(cats), len(bors)
    lam = _as_matrix(arrival_rates, K, B, "arrival_rates")
    risk = _as_matrix(risk_ratings, K, B, "risk_ratings")
    if np.any(lam < 0):
        raise NegativeEntry("arrival_rates must be nonnegative")
    if np.any(risk <= 0):
        raise NonPositiveRisk("risk_ratings must be strictly positive")
    total_budget = float(total_budget)
    tail_param = float(tail_param)
    if tail_param <= 0:
        raise NonPositiveTail(f"tail_param must be > 0, got {tail_param}")
    slack = total_budget - float(lam.sum())
    if slack <= 0:
        raise NonPositiveSlack(
            f"total_budget {total_budget} leaves no slack over "
            f"total arrivals {lam.sum()}"
        )
    return ProblemInstance(cats, bors, lam, risk, total_budget, tail_param)


@dataclass(eq=False)
class StylizedSolution:
    """Output of an analytical solve.

    slas holds z (NaN at pairs with zero arrival rate, which carry no SLA),
    gps_weights the per-borough service weights, budgets the per-borough
    inspection budgets C_b, slacks the per-pair service margins x = C_b*phi - lam.
    efficiency_loss is the summed expected SLA cost, equity_loss the max
    borough cost.
    """

    slas: np.ndarray
    gps_weights: np.ndarray
    budgets: np.ndarray
    slacks: np.ndarray
    efficiency_loss: float
    equity_loss: float


@dataclass(eq=False)
class BoroughBudgetPolicy:
    """Operational policy with per-borough budgets.

    budget_frac (B,) splits the daily citywide capacity across boroughs;
    gps (K, B) holds per-borough service weights (each column sums to 1);
    target_frac (K, B) holds inspection fractions p in [0, 1] applied at
    review time.
    """

    budget_frac: np.ndarray
    gps: np.ndarray
    target_frac: np.ndarray

    def __post_init__(self):
        self.budget_frac = np.asarray(self.budget_frac, dtype=float)
        B = self.budget_frac.shape[0]
        if self.budget_frac.ndim != 1 or B == 0:
            raise DimensionMismatch("budget_frac must be a nonempty vector")
        self.gps = np.asarray(self.gps, dtype=float)
        if self.gps.ndim != 2 or self.gps.shape[1] != B:
            raise DimensionMismatch(
                f"gps must be (K, {B}), got {self.gps.shape}"
            )
        K = self.gps.shape[0]
        self.target_frac = _as_matrix(self.target_frac, K, B, "target_frac")
        if np.any(self.budget_frac < 0) or np.any(self.gps < 0):
            raise NegativeEntry("policy weights must be nonnegative")
        if abs(self.budget_frac.sum() - 1.0) > _SUM_TOL:
            raise DimensionMismatch("budget_frac must sum to 1")
        col = self.gps.sum(axis=0)
        if np.any(np.abs(col - 1.0) > _SUM_TOL):
            raise DimensionMismatch("each gps column must sum to 1")
        if np.any(self.target_frac < 0) or np.any(self.target_frac > 1):
            raise FractionOutOfRange("target_frac entries must lie in [0, 1]")

    @property
    def n_categories(self) -> int:
        return self.gps.shape[0]

    @property
    def n_boroughs(self) -> int:
        return self.gps.shape[1]

    def to_vector(self) -> np.ndarray:
        """Flatten back to the raw vector layout (already normalized)."""
        return np.concatenate(
            [self.budget_frac, self.gps.T.ravel(), self.target_frac.T.ravel()]
        )


@dataclass(eq=False)
class CityBudgetPolicy:
    """Operational policy with one citywide queue.

    gps (K, B) sums to 1 over all pairs; target_frac holds the entry-time
    inspection fractions, or None until derived from traces.
    """

    gps: np.ndarray
    target_frac: np.ndarray | None = None

    def __post_init__(self):
        self.gps = np.asarray(self.gps, dtype=float)
        if self.gps.ndim != 2 or 0 in self.gps.shape:
            raise DimensionMismatch("gps must be a nonempty (K, B) matrix")
        if np.any(self.gps < 0):
            raise NegativeEntry("gps weights must be nonnegative")
        if abs(self.gps.sum() - 1.0) > _SUM_TOL:
            raise DimensionMismatch("gps must sum to 1 over all pairs")
        if self.target_frac is not None:
            K, B = self.gps.shape
            self.target_frac = _as_matrix(self.target_frac, K, B, "target_frac")
            if np.any(self.target_frac < 0) or np.any(self.target_frac > 1):
                raise FractionOutOfRange("target_frac entries must lie in [0, 1]")

    @property
    def n_categories(self) -> int:
        return self.gps.shape[0]

    @property
    def n_boroughs(self) -> int:
        return self.gps.shape[1]

    def to_vector(self) -> np.ndarray:
        return self.gps.T.ravel().copy()


def borough_policy_from_vector(
    raw, n_categories: int, n_boroughs: int
) -> BoroughBudgetPolicy:
    """Map a raw parameter vector to a valid BoroughBudgetPolicy.

    Layout: budget weights (B), then GPS weights borough-major (B*K), then
    inspection fractions borough-major (B*K). Weight groups are normalized
    proportionally (all-zero group -> uniform); inspection fractions must
    already lie in [0, 1]. The mapping is total on valid raw vectors,
    idempotent, and invariant to positive rescaling of each weight group.
    """
    K, B = int(n_categories), int(n_boroughs)
    raw = np.asarray(raw, dtype=float)
    want = B + 2 * K * B
    if raw.shape != (want,):
        raise DimensionMismatch(
            f"raw vector must have length {want} = B + 2*K*B, got {raw.shape}"
        )
    if np.any(raw[: B + K * B] < 0):
        raise NegativeEntry("weight entries must be nonnegative")
    p = raw[B + K * B :]
    if np.any(p < 0) or np.any(p > 1):
        raise FractionOutOfRange("inspection fractions must lie in [0, 1]")
    budget = normalize_weights(raw[:B])
    gps_bm = raw[B : B + K * B].reshape(B, K)
    gps = np.stack([normalize_weights(row) for row in gps_bm], axis=1)
    target = p.reshape(B, K).T.copy()
    return BoroughBudgetPolicy(budget, gps, target)


def city_policy_from_vector(
    raw, n_categories: int, n_boroughs: int, target_frac=None
) -> CityBudgetPolicy:
    """Map raw GPS weights (borough-major, length K*B) to a CityBudgetPolicy."""
    K, B = int(n_categories), int(n_boroughs)
    raw = np.asarray(raw, dtype=float)
    if raw.shape != (K * B,):
        raise DimensionMismatch(
            f"raw vector must have length {K * B} = K*B, got {raw.shape}"
        )
    if np.any(raw < 0):
        raise NegativeEntry("weight entries must be nonnegative")
    gps = normalize_weights(raw).reshape(B, K).T.copy()
    return CityBudgetPolicy(gps, target_frac)


@dataclass(eq=False)
class ArrivalTrace:
    """Daily incident arrivals over a fixed horizon.

    counts is (T, K, B) integer arrivals per day and pair. Incident-level
    records (arrays day/category_index/borough_index plus region labels) are
    optional; when absent the simulator synthesizes one incident per count
    with the borough name as region.
    """

    categories: tuple[str, ...]
    boroughs: tuple[str, ...]
    counts: np.ndarray
    record_day: np.ndarray | None = None
    record_category: np.ndarray | None = None
    record_borough: np.ndarray | None = None
    record_region: tuple[str, ...] | None = None
    start_date: date | None = None

    def __post_init__(self):
        self.categories = _check_names(self.categories, "category")
        self.boroughs = _check_names(self.boroughs, "borough")
        K, B = len(self.categories), len(self.boroughs)
        self.counts = np.asarray(self.counts)
        if self.counts.ndim != 3 or self.counts.shape[1:] != (K, B):
            raise DimensionMismatch(
                f"counts must be (T, {K}, {B}), got {self.counts.shape}"
            )
        if not np.issubdtype(self.counts.dtype, np.integer):
            rounded = np.rint(self.counts)
            if np.any(np.abs(self.counts - rounded) > 0):
                raise NegativeEntry("counts must be integers")
            self.counts = rounded
        self.counts = self.counts.astype(np.int64)
        if np.any(self.counts < 0):
            raise NegativeEntry("counts must be nonnegative")
        has_records = self.record_day is not None
        if has_records:
            self.record_day = np.asarray(self.record_day, dtype=np.int64)
            self.record_category = np.asarray(self.record_category, dtype=np.int64)
            self.record_borough = np.asarray(self.record_borough, dtype=np.int64)
            n = self.record_day.shape[0]
            if (
                self.record_category.shape != (n,)
                or self.record_borough.shape != (n,)
                or (self.record_region is not None and len(self.record_region) != n)
            ):
                raise DimensionMismatch("record arrays must share one length")
            if n != int(self.counts.sum()):
                raise DimensionMismatch(
                    "record arrays disagree with counts total"
                )

    @property
    def horizon(self) -> int:
        return self.counts.shape[0]

    @property
    def n_categories(self) -> int:
        return len(self.categories)

    @property
    def n_boroughs(self) -> int:
        return len(self.boroughs)


@dataclass(eq=False)
class CapacityTrace:
    """Daily citywide inspection capacity over a fixed horizon."""

    capacity: np.ndarray
    start_date: date | None = None

    def __post_init__(self):
        self.capacity = np.asarray(self.capacity)
        if self.capacity.ndim != 1:
            raise DimensionMismatch("capacity must be a vector")
        if not np.issubdtype(self.capacity.dtype, np.integer):
            rounded = np.rint(self.capacity)
            if np.any(np.abs(self.capacity - rounded) > 0):
                raise NegativeCapacity("capacity must be whole inspections")
            self.capacity = rounded
        self.capacity = self.capacity.astype(np.int64)
        if np.any(self.capacity < 0):
            raise NegativeCapacity("capacity must be nonnegative")

    @property
    def horizon(self) -> int:
        return self.capacity.shape[0]
