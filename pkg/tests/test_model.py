import numpy as np
import pytest

from slaforge import errors
from slaforge.model import (
    ArrivalTrace,
    BoroughBudgetPolicy,
    CapacityTrace,
    CityBudgetPolicy,
    borough_policy_from_vector,
    build_instance,
    city_policy_from_vector,
    normalize_weights,
)


class TestBuildInstance:
    def test_valid_two_by_two(self):
        inst = build_instance(
            ["a", "b"],
            ["x", "y"],
            [[1.0, 2.0], [0.5, 1.5]],
            [[1.0, 4.0], [2.0, 8.0]],
            total_budget=10.0,
            tail_param=1.0,
        )
        assert inst.n_categories == 2
        assert inst.n_boroughs == 2
        assert inst.slack == pytest.approx(5.0)

    def test_budget_equal_to_arrivals_rejected(self):
        with pytest.raises(errors.NonPositiveSlack):
            build_instance(
                ["a"], ["x"], [[2.0]], [[1.0]], total_budget=2.0, tail_param=1.0
            )

    def test_negative_arrival_rejected(self):
        with pytest.raises(errors.NegativeEntry):
            build_instance(
                ["a"], ["x"], [[-0.1]], [[1.0]], total_budget=2.0, tail_param=1.0
            )

    def test_nonpositive_risk_rejected(self):
        with pytest.raises(errors.NonPositiveRisk):
            build_instance(
                ["a"], ["x"], [[1.0]], [[0.0]], total_budget=2.0, tail_param=1.0
            )

    def test_nonpositive_tail_rejected(self):
        with pytest.raises(errors.NonPositiveTail):
            build_instance(
                ["a"], ["x"], [[1.0]], [[1.0]], total_budget=2.0, tail_param=0.0
            )

    def test_shape_mismatch_rejected(self):
        with pytest.raises(errors.DimensionMismatch):
            build_instance(
                ["a"], ["x", "y"], [[1.0]], [[1.0]], total_budget=2.0, tail_param=1.0
            )

    def test_duplicate_names_rejected(self):
        with pytest.raises(errors.DimensionMismatch):
            build_instance(
                ["a", "a"],
                ["x"],
                [[1.0], [1.0]],
                [[1.0], [1.0]],
                total_budget=3.0,
                tail_param=1.0,
            )


class TestVectorMapping:
    def test_uniform_from_ones(self):
        K, B = 2, 2
        raw = np.ones(B + 2 * K * B)
        pol = borough_policy_from_vector(raw, K, B)
        np.testing.assert_allclose(pol.budget_frac, [0.5, 0.5])
        np.testing.assert_allclose(pol.gps, np.full((K, B), 0.5))
        np.testing.assert_allclose(pol.target_frac, np.ones((K, B)))

    def test_proportional_normalization(self):
        raw = np.array([3.0, 1.0] + [2.0, 6.0, 1.0, 1.0] + [0.25, 1.0, 0.5, 0.0])
        pol = borough_policy_from_vector(raw, 2, 2)
        np.testing.assert_allclose(pol.budget_frac, [0.75, 0.25])
        # borough-major blocks: borough 0 weights (2, 6) -> (0.25, 0.75)
        np.testing.assert_allclose(pol.gps[:, 0], [0.25, 0.75])
        np.testing.assert_allclose(pol.gps[:, 1], [0.5, 0.5])
        np.testing.assert_allclose(pol.target_frac[:, 0], [0.25, 1.0])
        np.testing.assert_allclose(pol.target_frac[:, 1], [0.5, 0.0])

    def test_all_zero_group_maps_to_uniform(self):
        K, B = 2, 1
        raw = np.concatenate([[0.0], np.zeros(K), np.full(K, 0.5)])
        pol = borough_policy_from_vector(raw, K, B)
        np.testing.assert_allclose(pol.budget_frac, [1.0])
        np.testing.assert_allclose(pol.gps[:, 0], [0.5, 0.5])

    def test_wrong_length_rejected(self):
        with pytest.raises(errors.DimensionMismatch):
            borough_policy_from_vector(np.ones(7), 2, 2)

    def test_negative_weight_rejected(self):
        raw = np.ones(1 + 2 + 2)
        raw[1] = -0.5
        with pytest.raises(errors.NegativeEntry):
            borough_policy_from_vector(raw, 2, 1)

    def test_fraction_out_of_range_rejected(self):
        raw = np.ones(1 + 2 + 2)
        raw[-1] = 1.5
        with pytest.raises(errors.FractionOutOfRange):
            borough_policy_from_vector(raw, 2, 1)

    def test_idempotent_and_scale_invariant(self, rng):
        for _ in range(50):
            K = int(rng.integers(1, 4))
            B = int(rng.integers(1, 4))
            raw = np.concatenate(
                [
                    rng.uniform(0, 2, size=B),
                    rng.uniform(0, 2, size=K * B),
                    rng.uniform(0, 1, size=K * B),
                ]
            )
            pol = borough_policy_from_vector(raw, K, B)
            again = borough_policy_from_vector(pol.to_vector(), K, B)
            np.testing.assert_allclose(again.budget_frac, pol.budget_frac, rtol=1e-12)
            np.testing.assert_allclose(again.gps, pol.gps, rtol=1e-12)
            np.testing.assert_allclose(again.target_frac, pol.target_frac, rtol=1e-12)
            scaled = raw.copy()
            scaled[: B + K * B] *= 7.25
            pol2 = borough_policy_from_vector(scaled, K, B)
            np.testing.assert_allclose(pol2.budget_frac, pol.budget_frac, rtol=1e-12)
            np.testing.assert_allclose(pol2.gps, pol.gps, rtol=1e-12)
            assert abs(pol.budget_frac.sum() - 1.0) < 1e-12
            assert np.abs(pol.gps.sum(axis=0) - 1.0).max() < 1e-12

    def test_city_policy_from_vector(self):
        raw = np.array([1.0, 1.0, 1.0, 1.0])
        pol = city_policy_from_vector(raw, 2, 2)
        np.testing.assert_allclose(pol.gps, np.full((2, 2), 0.25))
        assert pol.target_frac is None
        again = city_policy_from_vector(pol.to_vector(), 2, 2)
        np.testing.assert_allclose(again.gps, pol.gps, rtol=1e-12)

    def test_normalize_weights_rejects_negative(self):
        with pytest.raises(errors.NegativeEntry):
            normalize_weights(np.array([1.0, -1.0]))


class TestPolicyValidation:
    def test_borough_policy_checks_sums(self):
        with pytest.raises(errors.DimensionMismatch):
            BoroughBudgetPolicy(
                np.array([0.6, 0.6]),
                np.full((1, 2), 1.0),
                np.zeros((1, 2)),
            )

    def test_city_policy_checks_sum(self):
        with pytest.raises(errors.DimensionMismatch):
            CityBudgetPolicy(np.full((2, 2), 1.0))

    def test_target_frac_range(self):
        with pytest.raises(errors.FractionOutOfRange):
            BoroughBudgetPolicy(
                np.array([1.0]), np.ones((1, 1)), np.array([[1.2]])
            )


class TestTraces:
    def test_arrival_trace_shape_checks(self):
        with pytest.raises(errors.DimensionMismatch):
            ArrivalTrace(("a",), ("x",), np.zeros((3, 2, 1), dtype=int))

    def test_arrival_trace_negative_counts(self):
        with pytest.raises(errors.NegativeEntry):
            ArrivalTrace(("a",), ("x",), np.array([[[-1]]]))

    def test_record_consistency(self):
        counts = np.array([[[2]], [[0]]])
        with pytest.raises(errors.DimensionMismatch):
            ArrivalTrace(
                ("a",),
                ("x",),
                counts,
                record_day=np.array([0]),
                record_category=np.array([0]),
                record_borough=np.array([0]),
            )

    def test_capacity_trace_negative(self):
        with pytest.raises(errors.NegativeCapacity):
            CapacityTrace(np.array([1, -1]))

    def test_horizon(self):
        trace = ArrivalTrace(("a",), ("x",), np.zeros((4, 1, 1), dtype=int))
        assert trace.horizon == 4
        cap = CapacityTrace(np.array([1, 2, 3]))
        assert cap.horizon == 3
