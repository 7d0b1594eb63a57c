import itertools
import math

import numpy as np
import pytest

from slaforge import errors
from slaforge.model import build_instance
from slaforge.stylized import (
    SolutionReport,
    WeightedObjectiveConfig,
    borough_cost_stylized,
    price_of_efficiency,
    price_of_equity,
    solve_extreme_efficiency,
    solve_extreme_equity,
    solve_weighted,
    verify_solution,
)
from tests.conftest import random_instance


def one_borough_instance():
    # two categories, one borough: lam=(1,4), r=(1,1), C=7, alpha=1
    return build_instance(
        ["a", "b"], ["x"], [[1.0], [4.0]], [[1.0], [1.0]], 7.0, 1.0
    )


def two_borough_instance():
    # one category, two boroughs: lam=(1,1), r=(4,1), C=4, alpha=1
    return build_instance(
        ["a"], ["x", "y"], [[1.0, 1.0]], [[4.0, 1.0]], 4.0, 1.0
    )


def grid_min_over_simplex(instance, gamma, steps=1000):
    """Independent oracle: exhaustive grid over positive slack splits.

    Enumerates every composition of `steps` grid units over the active cells
    and returns the smallest weighted loss found. Only usable for tiny
    instances; costs are evaluated directly, with no allocation structure
    assumed.
    """
    lam = instance.arrival_rates
    lr = (lam * instance.risk_ratings).ravel()
    B = instance.n_boroughs
    borough_of = np.repeat(np.arange(B)[None, :], instance.n_categories, 0).ravel()
    active = lr > 0
    lr = lr[active]
    borough_of = borough_of[active]
    n = lr.shape[0]
    total = instance.slack
    alpha = instance.tail_param
    best = math.inf
    for combo in itertools.combinations(range(1, steps), n - 1):
        parts = np.diff((0,) + combo + (steps,))
        x = parts / steps * total
        cost_cells = alpha * lr / x
        cb = np.zeros(B)
        np.add.at(cb, borough_of, cost_cells)
        val = gamma * cb.sum() + (1 - gamma) * cb.max()
        if val < best:
            best = val
    return best


class TestBoroughCost:
    def test_hand_example(self):
        inst = one_borough_instance()
        z = np.array([[1.5], [0.75]])
        np.testing.assert_allclose(borough_cost_stylized(inst, z), [4.5])

    def test_zero_rate_pairs_skipped(self):
        inst = build_instance(
            ["a", "b"], ["x"], [[0.0], [2.0]], [[3.0], [1.0]], 5.0, 1.0
        )
        z = np.array([[np.nan], [2.0]])
        np.testing.assert_allclose(borough_cost_stylized(inst, z), [4.0])

    def test_linear_in_z(self, rng):
        inst = random_instance(rng)
        z = rng.uniform(0.5, 3.0, size=inst.arrival_rates.shape)
        c1 = borough_cost_stylized(inst, z)
        c2 = borough_cost_stylized(inst, 2.0 * z)
        np.testing.assert_allclose(c2, 2.0 * c1, rtol=1e-12)

    def test_nonpositive_sla_rejected(self):
        inst = one_borough_instance()
        with pytest.raises(errors.NonPositiveSLA):
            borough_cost_stylized(inst, np.array([[1.0], [0.0]]))


class TestExtremeEfficiency:
    def test_worked_example(self):
        sol = solve_extreme_efficiency(one_borough_instance())
        np.testing.assert_allclose(sol.slacks, [[2.0 / 3.0], [4.0 / 3.0]], rtol=1e-12)
        np.testing.assert_allclose(sol.slas, [[1.5], [0.75]], rtol=1e-12)
        assert sol.efficiency_loss == pytest.approx(4.5, rel=1e-12)
        np.testing.assert_allclose(sol.budgets, [7.0])

    def test_closed_form_objective(self, rng):
        for _ in range(20):
            inst = random_instance(rng)
            sol = solve_extreme_efficiency(inst)
            s = np.sqrt(inst.arrival_rates * inst.risk_ratings)
            want = inst.tail_param * s.sum() ** 2 / inst.slack
            assert sol.efficiency_loss == pytest.approx(want, rel=1e-12)

    def test_sla_inverse_to_weight(self, rng):
        # z proportional to 1/sqrt(lam*r): z * sqrt(lam*r) constant
        for _ in range(10):
            inst = random_instance(rng)
            sol = solve_extreme_efficiency(inst)
            s = np.sqrt(inst.arrival_rates * inst.risk_ratings)
            prods = (sol.slas * s)[inst.arrival_rates > 0]
            assert np.ptp(prods) < 1e-9 * prods.max()

    def test_grid_oracle_one_borough(self):
        inst = one_borough_instance()
        sol = solve_extreme_efficiency(inst)
        best = grid_min_over_simplex(inst, gamma=1.0)
        assert sol.efficiency_loss <= best + 1e-3 * best

    def test_all_rates_zero(self):
        inst = build_instance(["a"], ["x"], [[0.0]], [[1.0]], 1.0, 1.0)
        with pytest.raises(errors.AllRatesZero):
            solve_extreme_efficiency(inst)


class TestExtremeEquity:
    def test_worked_example(self):
        sol = solve_extreme_equity(two_borough_instance())
        np.testing.assert_allclose(sol.slacks, [[1.6, 0.4]], rtol=1e-12)
        np.testing.assert_allclose(sol.slas, [[0.625, 2.5]], rtol=1e-12)
        assert sol.efficiency_loss == pytest.approx(5.0, rel=1e-12)
        assert sol.equity_loss == pytest.approx(2.5, rel=1e-12)

    def test_costs_equalized(self, rng):
        for _ in range(20):
            inst = random_instance(rng)
            sol = solve_extreme_equity(inst)
            costs = borough_cost_stylized(inst, sol.slas)
            assert np.ptp(costs) <= 1e-9 * costs.max()
            want = (
                inst.tail_param
                * (np.sqrt(inst.arrival_rates * inst.risk_ratings).sum(axis=0) ** 2).sum()
                / inst.slack
            )
            assert costs.max() == pytest.approx(want, rel=1e-12)

    def test_grid_oracle(self):
        inst = two_borough_instance()
        sol = solve_extreme_equity(inst)
        best = grid_min_over_simplex(inst, gamma=0.0)
        assert sol.equity_loss <= best + 1e-3 * best

    def test_borough_with_no_risk(self):
        inst = build_instance(
            ["a"], ["x", "y"], [[1.0, 0.0]], [[1.0, 1.0]], 3.0, 1.0
        )
        with pytest.raises(errors.BoroughWithNoRisk):
            solve_extreme_equity(inst)


class TestSolveWeighted:
    def test_frozen_midpoint_example(self):
        # 1-D brute force over X1 at step 1e-5 gives objective 3.6642135624
        # at X1 = 1.47759 (analytic: X1 = 4*sqrt(2)/(1+2*sqrt(2))).
        inst = two_borough_instance()
        sol = solve_weighted(inst, WeightedObjectiveConfig(0.5))
        loss = 0.5 * sol.efficiency_loss + 0.5 * sol.equity_loss
        assert loss == pytest.approx(3.6642135624, abs=1e-6)
        assert sol.slacks[0, 0] == pytest.approx(1.4775922501, abs=1e-4)

    def test_matches_extremes(self, rng):
        for _ in range(25):
            inst = random_instance(rng)
            eff = solve_extreme_efficiency(inst)
            we = solve_weighted(inst, WeightedObjectiveConfig(1.0))
            assert we.efficiency_loss == pytest.approx(
                eff.efficiency_loss, rel=1e-9
            )
            act = inst.arrival_rates > 0
            np.testing.assert_allclose(
                we.slas[act], eff.slas[act], rtol=1e-8
            )
            eq = solve_extreme_equity(inst)
            wq = solve_weighted(inst, WeightedObjectiveConfig(0.0))
            assert wq.equity_loss == pytest.approx(eq.equity_loss, rel=1e-9)
            np.testing.assert_allclose(
                wq.slas[act], eq.slas[act], rtol=1e-8
            )

    def test_grid_oracle_small_instances(self, rng):
        for _ in range(6):
            inst = random_instance(rng, max_categories=2, max_boroughs=2)
            while inst.n_categories * inst.n_boroughs > 3:
                inst = random_instance(rng, max_categories=2, max_boroughs=2)
            for gamma in (0.0, 0.5, 1.0):
                sol = solve_weighted(inst, WeightedObjectiveConfig(gamma))
                loss = gamma * sol.efficiency_loss + (1 - gamma) * sol.equity_loss
                best = grid_min_over_simplex(inst, gamma, steps=400)
                assert loss <= best * (1 + 1e-9)
                assert loss >= best * (1 - 5e-3)

    def test_gamma_sweep_monotone(self, rng):
        inst = random_instance(rng)
        gs, fs = [], []
        for gamma in np.linspace(0, 1, 11):
            sol = solve_weighted(inst, WeightedObjectiveConfig(float(gamma)))
            gs.append(sol.efficiency_loss)
            fs.append(sol.equity_loss)
        assert all(b - a <= 1e-8 for a, b in zip(gs, gs[1:]))
        assert all(b - a >= -1e-8 for a, b in zip(fs, fs[1:]))

    def test_zero_arrival_borough_allowed_for_positive_gamma(self):
        inst = build_instance(
            ["a"], ["x", "y"], [[1.0, 0.0]], [[1.0, 1.0]], 3.0, 1.0
        )
        sol = solve_weighted(inst, WeightedObjectiveConfig(0.5))
        assert sol.budgets[1] == pytest.approx(0.0)
        with pytest.raises(errors.BoroughWithNoRisk):
            solve_weighted(inst, WeightedObjectiveConfig(0.0))

    def test_bad_gamma_rejected(self):
        with pytest.raises(errors.FractionOutOfRange):
            WeightedObjectiveConfig(1.5)


class TestPrices:
    def test_worked_examples(self):
        inst = two_borough_instance()
        assert price_of_equity(inst) == pytest.approx(0.5, abs=1e-12)
        assert price_of_efficiency(inst) == pytest.approx(0.5, abs=1e-12)

    def test_match_solver_differences(self, rng):
        for _ in range(25):
            lam = rng.uniform(0.1, 5.0, size=(1, 2))
            risk = rng.uniform(0.5, 12.0, size=(1, 2))
            slack = float(rng.uniform(0.5, 10.0))
            inst = build_instance(
                ["a"], ["x", "y"], lam, risk, float(lam.sum()) + slack, 1.0
            )
            eff = solve_extreme_efficiency(inst)
            eq = solve_extreme_equity(inst)
            assert price_of_equity(inst) == pytest.approx(
                eq.efficiency_loss - eff.efficiency_loss, abs=1e-8
            )
            assert price_of_efficiency(inst) == pytest.approx(
                eff.equity_loss - eq.equity_loss, abs=1e-8
            )

    def test_zero_when_weights_equal(self):
        inst = build_instance(
            ["a"], ["x", "y"], [[2.0, 1.0]], [[1.0, 2.0]], 5.0, 1.0
        )
        assert price_of_equity(inst) == pytest.approx(0.0, abs=1e-12)
        assert price_of_efficiency(inst) == pytest.approx(0.0, abs=1e-12)

    def test_wrong_dimensions(self):
        with pytest.raises(errors.WrongDimensions):
            price_of_equity(one_borough_instance())


class TestVerifySolution:
    def test_clean_solution(self, rng):
        inst = random_instance(rng)
        sol = solve_weighted(inst, WeightedObjectiveConfig(0.5))
        report = verify_solution(inst, sol)
        assert isinstance(report, SolutionReport)
        assert report.max_residual < 1e-8
        assert report.min_active_slack > 0

    def test_detects_broken_slas(self):
        inst = one_borough_instance()
        sol = solve_extreme_efficiency(inst)
        sol.slas = sol.slas / 2.0
        report = verify_solution(inst, sol)
        assert report.sla_residual == pytest.approx(0.5, rel=1e-9)
