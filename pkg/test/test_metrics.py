"""
TEST METRICS
"""

import numpy as np
import pytest

from isurv.baselines import SurvivalCurve
from isurv.data import SurvivalDataset
from isurv.errors import SizeError, UndefinedMetricError
from isurv.grid import TimeGrid
from isurv.metrics import (
    EvaluationReport,
    brier_profile,
    brier_score,
    c_index,
    censoring_curve,
    concordance,
    integrated_brier,
    ks_distance,
    unconditional_sf,
)


def step(times, values) -> SurvivalCurve:
    return SurvivalCurve(np.array(times, dtype=float), np.array(values, dtype=float))


def uncensored_three() -> SurvivalDataset:
    return SurvivalDataset(np.zeros((3, 1)), [1.0, 2.0, 3.0], [1, 1, 1])


class TestConcordance:
    def test_perfect(self) -> None:
        times = np.array([1.0, 2.0, 3.0, 4.0])

        assert c_index(times, times, np.ones(4)) == 1.0
        assert c_index(-times, times, np.ones(4)) == 0.0

    def test_pair_enumeration(self) -> None:
        value, pairs, tied = concordance(np.array([2.0, 1.0, 3.0]), np.array([1.0, 2.0, 3.0]), np.ones(3))

        assert value == pytest.approx(2.0 / 3.0)
        assert pairs == 3
        assert tied == 0

    def test_ties_score_half(self) -> None:
        value, pairs, tied = concordance(np.full(3, 5.0), np.array([1.0, 2.0, 3.0]), np.ones(3))

        assert value == pytest.approx(0.5)
        assert tied == pairs == 3

    def test_censored_pairs(self) -> None:
        # The censored instance at time 1 anchors no pair
        value, pairs, _ = concordance(np.array([9.0, 1.0, 3.0]), np.array([1.0, 2.0, 3.0]), np.array([0, 1, 1]))

        assert pairs == 1
        assert value == 1.0

    def test_monotone_invariance(self) -> None:
        rng = np.random.default_rng(0)
        times = rng.exponential(size=40)
        events = rng.integers(0, 2, size=40)
        events[0] = 1
        pred = rng.normal(size=40)

        assert c_index(pred, times, events) == c_index(np.exp(3.0 * pred) + 1.0, times, events)

    def test_undefined(self) -> None:
        with pytest.raises(UndefinedMetricError):
            c_index(np.array([1.0, 2.0]), np.array([1.0, 2.0]), np.array([0, 0]))

    def test_random_predictions(self) -> None:
        rng = np.random.default_rng(21)
        values = list()
        for _ in range(1000):
            times = rng.exponential(size=50)
            events = rng.integers(0, 2, size=50)
            events[0] = 1
            values.append(c_index(rng.normal(size=50), times, events))

        assert np.mean(values) == pytest.approx(0.5, abs=0.03)


class TestBrier:
    def test_perfect(self) -> None:
        test = uncensored_three()
        G = censoring_curve(test.times, test.events)
        S = np.array([0.0, 1.0, 1.0])

        assert brier_score(1.5, S, test.times, test.events, G) == pytest.approx(0.0)

    def test_constant(self) -> None:
        test = uncensored_three()
        G = censoring_curve(test.times, test.events)

        assert brier_score(2.0, np.full(3, 0.5), test.times, test.events, G) == pytest.approx(0.25)

    def test_censored_hand_oracle(self) -> None:
        times = np.array([1.0, 2.0, 3.0])
        events = np.array([1, 0, 1])
        G = censoring_curve(times, events)

        # 0.2^2 / G(1-) = 0.04; censored at 2 adds 0; 0.3^2 / G(2.5) = 0.18
        value = brier_score(2.5, np.array([0.2, 0.6, 0.7]), times, events, G)

        assert value == pytest.approx((0.04 + 0.0 + 0.18) / 3.0)
        assert value == pytest.approx(0.073333, abs=1e-6)

    def test_zero_weight_excluded(self) -> None:
        times = np.array([1.0, 2.0])
        events = np.array([0, 1])
        G = step([0.0, 1.0], [1.0, 0.0])

        # G(1.5) = 0 removes the instance still at risk; the censored one contributes 0
        assert brier_score(1.5, np.array([0.3, 0.3]), times, events, G) == pytest.approx(0.0)

    def test_all_excluded(self) -> None:
        G = step([0.0, 1.0], [1.0, 0.0])

        with pytest.raises(UndefinedMetricError):
            brier_score(1.5, np.array([0.3]), np.array([2.0]), np.array([1]), G)


class TestIntegratedBrier:
    def test_perfect(self) -> None:
        test = uncensored_three()
        curves = [step([0.0, t], [1.0, 0.0]) for t in test.times]

        assert integrated_brier(curves, test, TimeGrid(np.array([1.0, 2.0, 3.0]))) == pytest.approx(0.0)

    def test_constant(self) -> None:
        test = uncensored_three()
        curves = [step([0.0], [0.5])] * 3

        assert integrated_brier(curves, test, TimeGrid(np.array([1.0, 2.0, 3.0]))) == pytest.approx(0.25)

    def test_single_point(self) -> None:
        test = uncensored_three()
        curves = [step([0.0, 1.5], [1.0, 0.4])] * 3
        G = censoring_curve(test.times, test.events)

        expected = brier_score(2.0, np.full(3, 0.4), test.times, test.events, G)

        assert integrated_brier(curves, test, TimeGrid(np.array([2.0]))) == pytest.approx(expected)

    def test_horizon(self) -> None:
        test = uncensored_three()
        curves = [step([0.0], [0.5])] * 3

        points, values = brier_profile(curves, test, TimeGrid(np.array([1.0, 2.0, 3.0, 7.0])), t_max=2.5)

        assert list(points) == [1.0, 2.0]
        assert values.shape == (2,)

        with pytest.raises(SizeError):
            brier_profile(curves, test, TimeGrid(np.array([5.0])))


class TestCurves:
    def test_ks(self) -> None:
        a = step([0.0, 1.0, 2.0], [1.0, 0.8, 0.5])
        b = step([0.0, 1.0, 2.0], [1.0, 0.6, 0.5])

        assert ks_distance(a, a) == 0.0
        assert ks_distance(a, b) == pytest.approx(0.2)
        assert ks_distance(step([0.0, 1.0], [1.0, 1.0]), step([0.0, 1.0], [1.0, 0.0])) == pytest.approx(1.0)

    def test_ks_union(self) -> None:
        a = step([0.0, 1.0], [1.0, 0.5])
        b = step([0.0, 2.0], [1.0, 0.5])

        assert ks_distance(a, b) == pytest.approx(0.5)

    def test_ks_is_a_metric(self) -> None:
        rng = np.random.default_rng(17)

        def random_curve() -> SurvivalCurve:
            n = int(rng.integers(2, 12))
            return step(np.cumsum(rng.uniform(0.1, 1.0, n)), np.sort(rng.uniform(size=n))[::-1])

        for _ in range(200):
            a, b, c = random_curve(), random_curve(), random_curve()

            assert ks_distance(a, b) == ks_distance(b, a)
            assert ks_distance(a, c) <= ks_distance(a, b) + ks_distance(b, c) + 1e-12

    def test_unconditional(self) -> None:
        a = step([0.0, 1.0, 2.0], [1.0, 1.0, 0.0])
        b = step([0.0, 1.0, 2.0], [1.0, 0.0, 0.0])

        assert np.allclose(unconditional_sf([a]).values, a.values)
        assert np.allclose(unconditional_sf([a, b]).values, [1.0, 0.5, 0.0])

        with pytest.raises(SizeError):
            unconditional_sf([])


class TestReport:
    def test_optional_fields(self) -> None:
        report = EvaluationReport(model="isurvj", dataset="linear", seed=0, c_index=0.7, ibs=0.1)

        assert "runtime" not in report.to_dict()
        assert "config_hash" not in report.to_dict()
        assert EvaluationReport("beran", "linear", 0, 0.6, 0.2, runtime=1.5).to_dict()["runtime"] == 1.5


### END ###
