import numpy as np
import pytest
from scipy.optimize import minimize

from palm.errors import DimensionMismatchError, EmptyRuleBaseError, NumericDomainError
from palm.fuzzy.inference import (
    Type2Inference,
    consequent,
    firing_weights,
    hyperplane_distances,
    infer,
    infer_type1,
    infer_type2,
    membership,
    point_to_hyperplane_distance,
    type_reduce,
)
from palm.fuzzy.types import Hyperplane, IntervalHyperplane, QFactors, RuleBase, StreamSample
from palm.schemas import ModelConfig


def _plane(*omega: float) -> Hyperplane:
    w = np.array(omega, dtype=float)
    return Hyperplane(omega=w, cov=np.eye(w.size))


def _interval(lower: list[float], upper: list[float]) -> IntervalHyperplane:
    lo, up = np.array(lower, dtype=float), np.array(upper, dtype=float)
    return IntervalHyperplane(
        omega_lower=lo, omega_upper=up, cov_lower=np.eye(lo.size), cov_upper=np.eye(up.size)
    )


def _type1_base(*rules: Hyperplane, gamma: float = 10.0) -> RuleBase:
    return RuleBase(ModelConfig(gamma=gamma), n_inputs=rules[0].omega.size - 1, rules=list(rules))


def _type2_base(*rules: IntervalHyperplane) -> RuleBase:
    config = ModelConfig(fuzzy_order="type2")
    return RuleBase(config, n_inputs=rules[0].omega_lower.size - 1, rules=list(rules))


class TestDistance:
    def test_intercept_excluded_from_norm(self) -> None:
        sample = StreamSample.from_inputs([2.0], 5.0, k=1)
        assert point_to_hyperplane_distance(sample, _plane(1.0, 1.0)) == pytest.approx(np.sqrt(2))

    def test_flat_plane_is_vertical_gap(self) -> None:
        sample = StreamSample.from_inputs([2.0, -1.0], 5.0, k=1)
        assert point_to_hyperplane_distance(sample, _plane(0.0, 0.0, 0.0)) == pytest.approx(5.0)

    def test_point_on_plane(self) -> None:
        sample = StreamSample.from_inputs([0.5, 0.25], 0.2 + 0.5 * 0.5 - 0.25, k=1)
        assert point_to_hyperplane_distance(sample, _plane(0.2, 0.5, -1.0)) == pytest.approx(0.0)

    def test_vectorized_matches_scalar(self) -> None:
        sample = StreamSample.from_inputs([0.3, 0.9], 0.4, k=1)
        rules = [_plane(0.1, 0.2, 0.3), _plane(-1.0, 2.0, 0.5), _plane(0.0, 0.0, 1.0)]
        batch = hyperplane_distances(sample.x_e, sample.y_d, np.vstack([r.omega for r in rules]))
        singles = [point_to_hyperplane_distance(sample, r) for r in rules]
        np.testing.assert_allclose(batch, singles)

    def test_non_finite_sample(self) -> None:
        sample = StreamSample.from_inputs([np.nan], 1.0, k=4)
        with pytest.raises(NumericDomainError):
            point_to_hyperplane_distance(sample, _plane(0.0, 1.0))

    def test_dimension_mismatch_names_sample(self) -> None:
        sample = StreamSample.from_inputs([1.0, 2.0], 1.0, k=9)
        with pytest.raises(DimensionMismatchError, match="sample 9"):
            point_to_hyperplane_distance(sample, _plane(0.0, 1.0))


class TestMembership:
    def test_scaled_by_largest_distance(self) -> None:
        mu = membership(np.array([0.0, 1.0, 2.0]), gamma=10.0)
        np.testing.assert_allclose(mu, [1.0, np.exp(-5.0), np.exp(-10.0)])

    def test_all_zero_distances_fire_fully(self) -> None:
        np.testing.assert_array_equal(membership(np.zeros(3), gamma=10.0), np.ones(3))

    def test_bounded(self) -> None:
        rng = np.random.default_rng(3)
        mu = membership(rng.uniform(0, 5, 20), gamma=50.0)
        assert np.all(mu > 0) and np.all(mu <= 1)

    def test_empty(self) -> None:
        with pytest.raises(EmptyRuleBaseError):
            membership(np.array([]), gamma=10.0)


class TestType1:
    def test_single_rule_returns_consequent(self) -> None:
        rb = _type1_base(_plane(0.5, 2.0))
        sample = StreamSample.from_inputs([3.0], 100.0, k=1)
        result = infer_type1(sample, rb)
        assert result.prediction == pytest.approx(6.5)
        assert result.weights[0] == pytest.approx(1.0)

    def test_nearest_rule_dominates(self) -> None:
        # y = x and y = 1; the sample lies on the first plane
        rb = _type1_base(_plane(0.0, 1.0), _plane(1.0, 0.0))
        sample = StreamSample.from_inputs([2.0], 2.0, k=1)
        result = infer_type1(sample, rb)
        expected = (2.0 + np.exp(-10.0)) / (1.0 + np.exp(-10.0))
        assert result.prediction == pytest.approx(expected)
        assert result.weights.sum() == pytest.approx(1.0)
        np.testing.assert_allclose(result.consequents, [2.0, 1.0])

    def test_consequent(self) -> None:
        sample = StreamSample.from_inputs([1.0, 2.0], 0.0, k=1)
        assert consequent(sample, _plane(1.0, 2.0, 3.0)) == pytest.approx(9.0)

    def test_empty_rule_base(self) -> None:
        rb = RuleBase(ModelConfig())
        with pytest.raises(EmptyRuleBaseError):
            infer(StreamSample.from_inputs([1.0], 1.0, k=1), rb)

    def test_dimension_drift(self) -> None:
        rb = _type1_base(_plane(0.0, 1.0))
        with pytest.raises(DimensionMismatchError, match="sample 3"):
            infer(StreamSample.from_inputs([1.0, 2.0], 1.0, k=3), rb)

    def test_weights_sum_to_one(self) -> None:
        rng = np.random.default_rng(3)
        for _ in range(50):
            rules = [_plane(*w) for w in rng.normal(size=(int(rng.integers(1, 6)), 4))]
            rb = RuleBase(ModelConfig(), n_inputs=3, rules=rules)
            sample = StreamSample.from_inputs(rng.uniform(size=3), rng.normal(), k=1)
            assert abs(infer_type1(sample, rb).weights.sum() - 1.0) <= 1e-12



class TestTypeReduction:
    def test_hand_computed(self) -> None:
        y, y_l, y_r = type_reduce(
            np.array([0.5, 1.0]),
            np.array([1.0, 1.0]),
            np.array([1.0, 3.0]),
            np.array([2.0, 4.0]),
            q_l=0.3,
            q_r=0.7,
        )
        assert y_l == pytest.approx(0.3 * 3.5 / 2 + 0.7 * 4 / 1.5)
        assert y_r == pytest.approx(0.7 * 5 / 2 + 0.3 * 6 / 1.5)
        assert y == pytest.approx((y_l + y_r) / 2)

    def test_crisp_interval_collapses_to_weighted_average(self) -> None:
        f = np.array([0.2, 0.8, 0.5])
        c = np.array([1.0, -2.0, 4.0])
        y, y_l, y_r = type_reduce(f, f, c, c, q_l=0.3, q_r=0.7)
        expected = float(f @ c / f.sum())
        assert y == pytest.approx(expected)
        assert y_l == pytest.approx(expected)
        assert y_r == pytest.approx(expected)


class TestType2:
    def test_single_rule_is_interval_midpoint(self) -> None:
        rb = _type2_base(_interval([0.0, 1.0], [1.0, 1.0]))
        sample = StreamSample.from_inputs([2.0], 2.5, k=1)
        result = infer_type2(sample, rb)
        assert isinstance(result, Type2Inference)
        assert result.y_l == pytest.approx(2.0)
        assert result.y_r == pytest.approx(3.0)
        assert result.prediction == pytest.approx(2.5)

    def test_firing_interval_is_ordered(self) -> None:
        # second rule's "lower" track sits closer to the sample than its "upper" track
        rb = _type2_base(
            _interval([0.0, 1.0], [0.2, 1.0]),
            _interval([1.0, 0.0], [-3.0, 0.0]),
        )
        sample = StreamSample.from_inputs([1.0], 1.0, k=1)
        result = infer(sample, rb)
        assert np.all(result.f_lower <= result.f_upper)

    def test_firing_weights_per_track(self) -> None:
        rb = _type2_base(
            _interval([0.0, 1.0], [0.1, 1.0]),
            _interval([1.0, 0.0], [1.1, 0.0]),
        )
        result = infer(StreamSample.from_inputs([0.5], 0.7, k=1), rb)
        lower, upper = firing_weights(result)
        assert lower.sum() == pytest.approx(1.0)
        assert upper.sum() == pytest.approx(1.0)

    def test_crisp_intervals_reduce_to_type1(self) -> None:
        rng = np.random.default_rng(4)
        for _ in range(50):
            weights = rng.normal(size=(int(rng.integers(1, 5)), 3))
            type1 = _type1_base(*[_plane(*w) for w in weights])
            type2 = _type2_base(*[_interval(list(w), list(w)) for w in weights])
            type2.q = QFactors(*sorted(rng.uniform(size=2)))
            sample = StreamSample.from_inputs(rng.uniform(size=2), rng.normal(), k=1)
            assert infer_type2(sample, type2).prediction == pytest.approx(
                infer_type1(sample, type1).prediction, rel=1e-12, abs=1e-12
            )



class TestWorkedExamples:
    def test_distance_matches_projection(self) -> None:
        sample = StreamSample.from_inputs([1.0, 1.0], 2.0, k=1)
        rule = _plane(0.5, 1.0, -2.0)
        expected = 2.5 / np.sqrt(6.0)
        assert point_to_hyperplane_distance(sample, rule) == pytest.approx(expected)

        point = np.array([1.0, 1.0, 2.0])

        def squared_gap(x: np.ndarray) -> float:
            on_plane = np.array([x[0], x[1], rule.omega @ np.array([1.0, x[0], x[1]])])
            return float(np.sum((point - on_plane) ** 2))

        result = minimize(squared_gap, x0=[1.0, 1.0], tol=1e-12)
        assert np.sqrt(result.fun) == pytest.approx(expected, abs=1e-5)

    def test_two_rule_type_reduction(self) -> None:
        f_lower, f_upper = [0.4, 0.2], [0.8, 0.6]
        intervals = [(1.0, 2.0), (3.0, 4.0)]
        q_l, q_r = 0.3, 0.7
        y_l = sum(q_l * fl * c[0] for fl, c in zip(f_lower, intervals)) / sum(f_upper) + sum(
            (1 - q_l) * fu * c[0] for fu, c in zip(f_upper, intervals)
        ) / sum(f_lower)
        y_r = sum(q_r * fl * c[1] for fl, c in zip(f_lower, intervals)) / sum(f_upper) + sum(
            (1 - q_r) * fu * c[1] for fu, c in zip(f_upper, intervals)
        ) / sum(f_lower)

        y, got_l, got_r = type_reduce(
            np.array(f_lower),
            np.array(f_upper),
            np.array([c[0] for c in intervals]),
            np.array([c[1] for c in intervals]),
            q_l,
            q_r,
        )
        assert got_l == pytest.approx(y_l)
        assert got_r == pytest.approx(y_r)
        assert y == pytest.approx((y_l + y_r) / 2)
