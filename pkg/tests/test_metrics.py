import numpy as np
import pytest

from slaforge import errors
from slaforge.metrics import (
    MetricsConfig,
    compute_losses,
    empirical_sla,
    group_costs,
    inspection_fractions,
)
from slaforge.simulator.engine import SimulationOutcome


def make_outcome(
    categories,
    boroughs,
    arrival_day,
    category_index,
    borough_index,
    fate,
    event_day,
    horizon,
    region_names=None,
    region_index=None,
):
    K, B = len(categories), len(boroughs)
    cat = np.asarray(category_index, dtype=np.int64)
    bor = np.asarray(borough_index, dtype=np.int64)
    counts = np.zeros((K, B), dtype=np.int64)
    np.add.at(counts, (cat, bor), 1)
    if region_names is None:
        region_names = tuple(boroughs)
        region_index = bor.copy()
    return SimulationOutcome(
        categories=tuple(categories),
        boroughs=tuple(boroughs),
        horizon=horizon,
        counts=counts,
        arrival_day=np.asarray(arrival_day, dtype=np.int64),
        category_index=cat,
        borough_index=bor,
        region_names=region_names,
        region_index=np.asarray(region_index, dtype=np.int64),
        fate=np.asarray(fate, dtype=np.uint8),
        event_day=np.asarray(event_day, dtype=np.int64),
    )


class TestEmpiricalSla:
    def test_nearest_rank_values(self):
        # delays 0, 1, 2, 10
        out = make_outcome(
            ["a"], ["x"],
            arrival_day=[0, 0, 0, 0],
            category_index=[0, 0, 0, 0],
            borough_index=[0, 0, 0, 0],
            fate=[1, 1, 1, 1],
            event_day=[0, 1, 2, 10],
            horizon=11,
        )
        assert empirical_sla(out, 50.0)[0, 0] == 1.0
        assert empirical_sla(out, 75.0)[0, 0] == 2.0
        assert empirical_sla(out, 76.0)[0, 0] == 10.0
        assert empirical_sla(out, 100.0)[0, 0] == 10.0
        assert empirical_sla(out, 1.0)[0, 0] == 0.0

    def test_nan_for_uninspected_pair(self):
        out = make_outcome(
            ["a"], ["x", "y"],
            arrival_day=[0, 0],
            category_index=[0, 0],
            borough_index=[0, 1],
            fate=[1, 2],
            event_day=[0, 3],
            horizon=5,
        )
        z = empirical_sla(out, 50.0)
        assert z[0, 0] == 0.0
        assert np.isnan(z[0, 1])

    def test_percentile_validation(self):
        out = make_outcome(
            ["a"], ["x"], [0], [0], [0], [1], [0], horizon=1
        )
        with pytest.raises(errors.FractionOutOfRange):
            empirical_sla(out, 0.0)
        with pytest.raises(errors.FractionOutOfRange):
            empirical_sla(out, 101.0)


class TestInspectionFractions:
    def test_mixed_fates(self):
        out = make_outcome(
            ["a"], ["x", "y"],
            arrival_day=[0, 0, 0, 1],
            category_index=[0, 0, 0, 0],
            borough_index=[0, 0, 0, 1],
            fate=[1, 2, 0, 1],
            event_day=[0, 0, -1, 1],
            horizon=2,
        )
        p = inspection_fractions(out)
        np.testing.assert_allclose(p, [[1 / 3, 1.0]])

    def test_nan_for_absent_pair(self):
        out = make_outcome(
            ["a", "b"], ["x"],
            arrival_day=[0],
            category_index=[0],
            borough_index=[0],
            fate=[1],
            event_day=[0],
            horizon=1,
        )
        p = inspection_fractions(out)
        assert p[0, 0] == 1.0
        assert np.isnan(p[1, 0])


class TestComputeLosses:
    def test_all_inspected_cost(self):
        # 3 arrivals, all inspected at delay 1, risk 10: cost = 3 * 10 * 1
        out = make_outcome(
            ["a"], ["x"],
            arrival_day=[0, 0, 0],
            category_index=[0, 0, 0],
            borough_index=[0, 0, 0],
            fate=[1, 1, 1],
            event_day=[1, 1, 1],
            horizon=3,
        )
        m = compute_losses(out, [[10.0]], MetricsConfig(drop_cost=100.0))
        assert m.efficiency_loss == pytest.approx(30.0)
        np.testing.assert_allclose(m.borough_costs, [30.0])

    def test_all_dropped_cost(self):
        # 1 arrival dropped, risk 10, drop_cost 100: cost = 1000
        out = make_outcome(
            ["a"], ["x"],
            arrival_day=[0],
            category_index=[0],
            borough_index=[0],
            fate=[2],
            event_day=[0],
            horizon=2,
        )
        m = compute_losses(out, [[10.0]], MetricsConfig(drop_cost=100.0))
        assert m.efficiency_loss == pytest.approx(1000.0)

    def test_backlogged_counts_as_missed(self):
        out = make_outcome(
            ["a"], ["x"],
            arrival_day=[0, 0],
            category_index=[0, 0],
            borough_index=[0, 0],
            fate=[1, 0],
            event_day=[2, -1],
            horizon=3,
        )
        m = compute_losses(out, [[1.0]], MetricsConfig(drop_cost=50.0))
        # 2 arrivals * risk 1 * (0.5 * 2 + 50 * 0.5)
        assert m.efficiency_loss == pytest.approx(2 * (0.5 * 2 + 50 * 0.5))

    def test_range_equity(self):
        # one category, SLAs 1 vs 3, risk 10 both: spread 20
        out = make_outcome(
            ["a"], ["x", "y"],
            arrival_day=[0, 0],
            category_index=[0, 0],
            borough_index=[0, 1],
            fate=[1, 1],
            event_day=[1, 3],
            horizon=4,
        )
        m = compute_losses(
            out, [[10.0, 10.0]], MetricsConfig(equity_kind="range")
        )
        assert m.equity_loss == pytest.approx(20.0)

    def test_range_skips_absent_pairs(self):
        # category b only arrives in borough x: no spread contribution
        out = make_outcome(
            ["a", "b"], ["x", "y"],
            arrival_day=[0, 0, 0],
            category_index=[0, 0, 1],
            borough_index=[0, 1, 0],
            fate=[1, 1, 1],
            event_day=[2, 2, 5],
            horizon=6,
        )
        m = compute_losses(out, np.ones((2, 2)), MetricsConfig(equity_kind="range"))
        assert m.equity_loss == pytest.approx(0.0)

    def test_range_charges_starved_pair_at_horizon(self):
        out = make_outcome(
            ["a"], ["x", "y"],
            arrival_day=[0, 0],
            category_index=[0, 0],
            borough_index=[0, 1],
            fate=[1, 0],
            event_day=[0, -1],
            horizon=20,
        )
        m = compute_losses(out, np.ones((1, 2)), MetricsConfig(equity_kind="range"))
        assert m.equity_loss == pytest.approx(20.0)

    def test_max_cost_equity(self):
        out = make_outcome(
            ["a"], ["x", "y"],
            arrival_day=[0, 0, 0],
            category_index=[0, 0, 0],
            borough_index=[0, 0, 1],
            fate=[1, 1, 1],
            event_day=[1, 1, 0],
            horizon=2,
        )
        m = compute_losses(
            out, [[2.0, 5.0]], MetricsConfig(equity_kind="max_cost")
        )
        # borough x: 2 * 2 * 1 = 4; borough y: 1 * 5 * 0 = 0
        np.testing.assert_allclose(m.borough_costs, [4.0, 0.0])
        assert m.equity_loss == pytest.approx(4.0)

    def test_drop_cost_monotonicity(self, rng):
        for _ in range(100):
            n = int(rng.integers(1, 30))
            K = int(rng.integers(1, 3))
            B = int(rng.integers(1, 3))
            cat = rng.integers(0, K, n)
            bor = rng.integers(0, B, n)
            fate = rng.integers(0, 3, n)
            aday = rng.integers(0, 5, n)
            eday = np.where(fate == 0, -1, aday + rng.integers(0, 4, n))
            out = make_outcome(
                [f"c{i}" for i in range(K)],
                [f"b{j}" for j in range(B)],
                aday, cat, bor, fate, eday, horizon=10,
            )
            risk = rng.uniform(0.5, 5, (K, B))
            lo = compute_losses(out, risk, MetricsConfig(drop_cost=10.0))
            hi = compute_losses(out, risk, MetricsConfig(drop_cost=20.0))
            assert hi.efficiency_loss >= lo.efficiency_loss - 1e-12
            if (fate != 1).any():
                assert hi.efficiency_loss > lo.efficiency_loss

    def test_risk_validation(self):
        out = make_outcome(["a"], ["x"], [0], [0], [0], [1], [0], horizon=1)
        with pytest.raises(errors.DimensionMismatch):
            compute_losses(out, np.ones((2, 2)))
        with pytest.raises(errors.NonPositiveRisk):
            compute_losses(out, [[0.0]])


class TestGroupCosts:
    def test_matches_borough_costs_without_regions(self):
        out = make_outcome(
            ["a"], ["x", "y"],
            arrival_day=[0, 0, 1],
            category_index=[0, 0, 0],
            borough_index=[0, 1, 1],
            fate=[1, 2, 1],
            event_day=[1, 0, 1],
            horizon=2,
        )
        cfg = MetricsConfig(drop_cost=7.0)
        risk = np.array([[3.0, 4.0]])
        m = compute_losses(out, risk, cfg)
        g = group_costs(out, risk, cfg)
        assert set(g) == {"x", "y"}
        assert g["x"] == pytest.approx(m.borough_costs[0])
        assert g["y"] == pytest.approx(m.borough_costs[1])

    def test_region_split(self):
        out = make_outcome(
            ["a"], ["x"],
            arrival_day=[0, 0],
            category_index=[0, 0],
            borough_index=[0, 0],
            fate=[1, 2],
            event_day=[0, 0],
            horizon=1,
            region_names=("north", "south"),
            region_index=[0, 1],
        )
        g = group_costs(out, [[2.0]], MetricsConfig(drop_cost=9.0))
        assert g["north"] == pytest.approx(2.0 * 0.0)
        assert g["south"] == pytest.approx(2.0 * 9.0)


class TestConfigValidation:
    def test_bad_values(self):
        with pytest.raises(errors.FractionOutOfRange):
            MetricsConfig(sla_percentile=0.0)
        with pytest.raises(errors.FractionOutOfRange):
            MetricsConfig(drop_cost=0.0)
        with pytest.raises(errors.FractionOutOfRange):
            MetricsConfig(equity_kind="spread")
