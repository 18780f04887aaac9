"""
TEST DATASETS & SYNTHETIC GENERATORS
"""

import math

import numpy as np
import pandas as pd
import pytest

from isurv.data import (
    FeaturePreprocessor,
    SurvivalDataset,
    SurvivalTable,
    SyntheticKind,
    SyntheticSpec,
    gen_response,
    fit_preprocessor,
    load_csv,
    make_dataset,
    prepare_split,
    read_table,
    save_csv,
    weibull_event_time,
)
from isurv.errors import DomainError, SchemaError, ShapeError, SizeError, ValidationError


class TestSurvivalDataset:
    def test_validation(self) -> None:
        X = np.zeros((3, 2))

        with pytest.raises(SizeError):
            SurvivalDataset(X[:1], [1.0], [1])
        with pytest.raises(ValidationError):
            SurvivalDataset(X, [1.0, -1.0, 2.0], [1, 0, 1])
        with pytest.raises(ValidationError):
            SurvivalDataset(X, [1.0, 2.0, 3.0], [1, 2, 0])
        with pytest.raises(SizeError):
            SurvivalDataset(X, [1.0, 2.0, 3.0], [0, 0, 0])

    def test_subset_and_summary(self) -> None:
        ds = SurvivalDataset(np.arange(8.0).reshape(4, 2), [1.0, 2.0, 3.0, 4.0], [1, 0, 1, 0])

        assert ds.n == 4 and ds.d == 2
        assert ds.columns == ["feature_0", "feature_1"]
        assert ds.censored_fraction == pytest.approx(0.5)

        sub = ds.subset([0, 2])
        assert sub.n == 2
        assert list(sub.times) == [1.0, 3.0]

    def test_immutable(self) -> None:
        ds = SurvivalDataset(np.zeros((2, 1)), [1.0, 2.0], [1, 1])

        with pytest.raises(ValueError):
            ds.times[0] = 5.0


class TestLoadCsv:
    def test_standardized_numeric(self, tmp_path) -> None:
        path = tmp_path / "three.csv"
        path.write_text("f1,time,event\n1,1.0,1\n2,2.0,0\n3,3.0,1\n")

        ds, _ = load_csv(str(path))

        assert ds.n == 3 and ds.d == 1
        assert ds.features[:, 0].mean() == pytest.approx(0.0, abs=1e-12)
        assert ds.features[:, 0].std() == pytest.approx(1.0)

    def test_bad_event(self, tmp_path) -> None:
        path = tmp_path / "bad.csv"
        path.write_text("f1,time,event\n1,1.0,1\n2,2.0,2\n")

        with pytest.raises(ValidationError):
            load_csv(str(path))

    def test_missing_column(self, tmp_path) -> None:
        path = tmp_path / "nocol.csv"
        path.write_text("f1,time\n1,1.0\n2,2.0\n")

        with pytest.raises(SchemaError):
            load_csv(str(path))

    def test_too_few_rows(self, tmp_path) -> None:
        path = tmp_path / "one.csv"
        path.write_text("f1,time,event\n1,1.0,1\n")

        with pytest.raises(SizeError):
            load_csv(str(path))

    def test_categorical_one_hot(self, tmp_path) -> None:
        path = tmp_path / "cat.csv"
        path.write_text("color,time,event\nred,1.0,1\ngreen,2.0,0\nblue,3.0,1\nred,4.0,1\n")

        ds, _ = load_csv(str(path))

        assert ds.d == 3
        assert ds.columns == ["color=blue", "color=green", "color=red"]
        assert np.allclose(ds.features.sum(axis=1), 1.0)

    def test_missing_rows_rejected(self, tmp_path) -> None:
        path = tmp_path / "gaps.csv"
        path.write_text("f1,time,event\n1,1.0,1\n,2.0,0\n3,3.0,1\n")

        ds, _ = load_csv(str(path))

        assert ds.n == 2

    def test_save_then_load_schema(self, tmp_path) -> None:
        train, _ = make_dataset(SyntheticSpec(kind="Linear", n_train=20, n_test=5, d=3, seed=1))
        path = tmp_path / "linear.csv"
        save_csv(train, str(path))

        again, _ = load_csv(str(path))

        assert again.n == 20 and again.d == 3
        assert np.allclose(again.times, train.times, rtol=1e-12)
        assert np.array_equal(again.events, train.events)


class TestSurvivalTable:
    def test_validation(self) -> None:
        frame = pd.DataFrame({"f1": [1.0, 2.0, 3.0]})

        with pytest.raises(SizeError):
            SurvivalTable(frame, [1.0, 2.0], [1, 1])
        with pytest.raises(SchemaError):
            SurvivalTable(frame[[]], [1.0, 2.0, 3.0], [1, 0, 1])

    def test_subset_resets_rows(self) -> None:
        table = SurvivalTable(pd.DataFrame({"f1": [1.0, 2.0, 3.0], "g": ["a", "b", "c"]}), [1.0, 2.0, 3.0], [1, 0, 1])

        sub = table.subset([2, 0])
        assert sub.n == 2
        assert list(sub.frame.index) == [0, 1]
        assert list(sub.frame["g"]) == ["c", "a"]
        assert list(sub.times) == [3.0, 1.0]

    def test_read_keeps_raw_values(self, tmp_path) -> None:
        path = tmp_path / "raw.csv"
        path.write_text("age,arm,time,event\n50,a,1.0,1\n70,b,2.0,0\n")

        table = read_table(str(path))

        assert list(table.frame.columns) == ["age", "arm"]
        assert list(table.frame["age"]) == [50, 70]
        assert list(table.events) == [1, 0]


class TestPreprocessing:
    def write(self, path, rows) -> str:
        path.write_text("age,stage,time,event\n" + "".join(f"{a},{s},{t},{e}\n" for a, s, t, e in rows))
        return str(path)

    def test_test_file_uses_training_statistics(self, tmp_path) -> None:
        train = self.write(tmp_path / "train.csv", [(40, "a", 1.0, 1), (60, "b", 2.0, 0), (80, "c", 3.0, 1)])
        test = self.write(tmp_path / "test.csv", [(60, "a", 1.5, 1), (80, "b", 2.5, 1), (100, "a", 3.5, 0)])

        train_set, preprocessor = load_csv(train)
        test_set, _ = load_csv(test, preprocessor)

        assert test_set.columns == train_set.columns == ["age", "stage=a", "stage=b", "stage=c"]
        assert test_set.features[0, 0] == pytest.approx(0.0)
        assert test_set.features[1, 0] == pytest.approx(train_set.features[2, 0])
        np.testing.assert_array_equal(test_set.features[:, 3], 0.0)

    def test_unseen_level_encodes_as_zeros(self, tmp_path) -> None:
        train = self.write(tmp_path / "train.csv", [(40, "a", 1.0, 1), (60, "b", 2.0, 0), (80, "a", 3.0, 1)])
        test = self.write(tmp_path / "test.csv", [(50, "z", 1.5, 1), (70, "b", 2.5, 1)])

        _, preprocessor = load_csv(train)
        test_set, _ = load_csv(test, preprocessor)

        assert test_set.d == 3
        np.testing.assert_array_equal(test_set.features[0, 1:], [0.0, 0.0])
        np.testing.assert_array_equal(test_set.features[1, 1:], [0.0, 1.0])

    def test_column_mismatch(self, tmp_path) -> None:
        _, preprocessor = load_csv(self.write(tmp_path / "train.csv", [(40, "a", 1.0, 1), (60, "b", 2.0, 0)]))
        wider = tmp_path / "wide.csv"
        wider.write_text("age,stage,grade,time,event\n50,a,1,1.0,1\n60,b,2,2.0,1\n")
        narrower = tmp_path / "narrow.csv"
        narrower.write_text("age,time,event\n50,1.0,1\n60,2.0,1\n")

        with pytest.raises(ShapeError):
            load_csv(str(wider), preprocessor)
        with pytest.raises(SchemaError):
            load_csv(str(narrower), preprocessor)

    def test_non_numeric_in_numeric_column(self) -> None:
        train = SurvivalTable(pd.DataFrame({"age": [40.0, 60.0]}), [1.0, 2.0], [1, 1])
        test = SurvivalTable(pd.DataFrame({"age": ["old", "60"]}), [1.0, 2.0], [1, 1])

        with pytest.raises(SchemaError):
            fit_preprocessor(train).apply(test)

    def test_restore_matches_fit(self) -> None:
        rng = np.random.default_rng(3)
        frame = pd.DataFrame({"x": rng.normal(5.0, 2.0, 20), "y": rng.uniform(size=20), "g": rng.choice(["p", "q", "r"], 20)})
        table = SurvivalTable(frame, rng.uniform(1.0, 5.0, 20), np.ones(20, dtype=np.int64))
        fitted = fit_preprocessor(table)

        restored = FeaturePreprocessor.restore(fitted.numeric, fitted.mean, fitted.scale, fitted.categorical, fitted.levels)

        assert restored.feature_names == fitted.feature_names
        np.testing.assert_array_equal(restored.transform(frame), fitted.transform(frame))

    def test_restore_rejects_mismatch(self) -> None:
        with pytest.raises(SchemaError):
            FeaturePreprocessor.restore(["x", "y"], np.zeros(1), np.ones(1), [], [])

    def test_split_fits_on_training_rows(self) -> None:
        train, test = make_dataset(SyntheticSpec(kind="Linear", n_train=60, n_test=30, d=2, seed=8))
        train_set, test_set, preprocessor = prepare_split(train, test)

        np.testing.assert_allclose(preprocessor.mean, train.features.mean(axis=0))
        np.testing.assert_allclose(train_set.features.mean(axis=0), 0.0, atol=1e-12)
        assert not np.allclose(test_set.features.mean(axis=0), 0.0, atol=1e-12)


class TestResponses:
    def test_friedman1(self) -> None:
        y = gen_response("Friedman1", np.full((1, 5), 0.5))

        assert y[0] == pytest.approx(10.0 * math.sin(math.pi / 4.0) + 5.0 + 2.5, abs=1e-4)
        assert y[0] == pytest.approx(14.5711, abs=1e-4)

    def test_linear(self) -> None:
        y = gen_response("Linear", np.array([[1.0, 1.0]]), coefs={"w": np.array([0.5, 0.5])})

        assert y[0] == pytest.approx(1.0)

    def test_quadratic(self) -> None:
        y = gen_response("Quadratic", np.array([[1.0, 0.0]]), coefs={"Q": np.eye(2)})

        assert y[0] == pytest.approx(1.0)

    def test_parabola(self) -> None:
        y = gen_response("Parabola", np.array([[2.0]]), coefs={"x0": 0.0})

        assert y[0] == pytest.approx(4.0)

    def test_dimension_mismatch(self) -> None:
        with pytest.raises(ValidationError):
            gen_response("Friedman1", np.zeros((2, 3)))
        with pytest.raises(ValidationError):
            gen_response("Parabola", np.zeros((2, 2)))

    def test_unknown_kind(self) -> None:
        with pytest.raises(ValidationError):
            SyntheticKind.parse("Cubic")


class TestWeibull:
    def test_examples(self) -> None:
        assert weibull_event_time(2.0, 1.0, math.exp(-1.0)) == pytest.approx(2.0)
        assert weibull_event_time(0.0, 3.0, 0.3) == 0.0
        assert weibull_event_time(1.0, 2.0, math.exp(-1.0)) == pytest.approx(1.12838, abs=1e-5)

    def test_domain(self) -> None:
        with pytest.raises(DomainError):
            weibull_event_time(1.0, 1.0, 0.0)
        with pytest.raises(DomainError):
            weibull_event_time(1.0, 1.0, 1.0)
        with pytest.raises(DomainError):
            weibull_event_time(1.0, 0.0, 0.5)

    def test_shape_one_is_exponential(self) -> None:
        rng = np.random.default_rng(11)
        u = rng.uniform(1e-12, 1.0 - 1e-12, 10_000)

        T = weibull_event_time(2.0, 1.0, u)

        assert T.mean() == pytest.approx(2.0, abs=0.1)
        assert np.mean(T > 2.0) == pytest.approx(math.exp(-1.0), abs=0.02)


class TestMakeDataset:
    def test_no_censoring(self) -> None:
        train, test = make_dataset(SyntheticSpec(kind="Linear", n_train=50, n_test=20, censor_prob=0.0))

        assert train.events.sum() == 50
        assert test.events.sum() == 20

    def test_deterministic(self) -> None:
        a_train, a_test = make_dataset(SyntheticSpec(kind="Friedman1", n_train=40, n_test=10, seed=7))
        b_train, b_test = make_dataset(SyntheticSpec(kind="Friedman1", n_train=40, n_test=10, seed=7))

        assert a_train.features.tobytes() == b_train.features.tobytes()
        assert a_train.times.tobytes() == b_train.times.tobytes()
        assert a_test.events.tobytes() == b_test.events.tobytes()

    def test_sizes_and_censoring(self) -> None:
        train, test = make_dataset(SyntheticSpec(kind="Linear", d=5, censor_prob=0.2, seed=0))

        assert train.n == 500 and test.n == 300
        assert train.d == 5
        assert 0.1 < train.censored_fraction < 0.3

    def test_censoring_fraction_large_sample(self) -> None:
        for p in (0.2, 0.6):
            train, _ = make_dataset(SyntheticSpec(kind="Linear", n_train=10_000, n_test=10, d=2, censor_prob=p, seed=5))

            assert train.censored_fraction == pytest.approx(p, abs=0.02)

    def test_parabola(self) -> None:
        spec = SyntheticSpec(kind="Parabola", d=4, censor_prob=0.1, n_test=100)
        train, test = make_dataset(spec)

        assert spec.d == 1
        assert train.n == 410 and test.n == 100
        assert np.allclose(train.times, train.features[:, 0] ** 2)

    def test_min_features(self) -> None:
        with pytest.raises(ValidationError):
            make_dataset(SyntheticSpec(kind="Friedman1", d=3))

    def test_every_kind(self) -> None:
        for kind in SyntheticKind:
            spec = SyntheticSpec(kind=kind, n_train=30, n_test=10, d=5, seed=3)
            train, test = make_dataset(spec)

            assert np.all(train.times >= 0.0)
            assert np.all(np.isfinite(test.times))


### END ###
