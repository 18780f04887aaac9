"""
TEST MODEL FILES & CURVE TABLES
"""

import json
from dataclasses import replace

import numpy as np
import pandas as pd
import pytest

from isurv.baselines import SurvivalCurve
from isurv.data import SurvivalTable, SyntheticSpec, fit_preprocessor, make_dataset
from isurv.errors import FormatError
from isurv.grid import build_grid, make_labels
from isurv.models import ModelConfig, model_interval_survival, predict_distributions, predict_survival, train
from isurv.readwrite import (
    decode_array,
    encode_array,
    load_model,
    model_to_dict,
    read_json,
    save_model,
    write_curve_table,
    write_curves,
)


def trained(variant: str):
    train_set, test_set = make_dataset(SyntheticSpec(kind="Linear", n_train=25, n_test=8, d=3, seed=2))
    grid = build_grid(train_set.times, train_set.events)
    labels = make_labels(grid, train_set.times, train_set.events)
    config = ModelConfig(variant=variant, epochs=4, embed_dim=6, M=3, fine_tune_epochs=3, seed=1)

    return train(train_set, grid, labels, config), test_set


class TestModelFiles:
    @pytest.mark.parametrize("variant", ["isurvm", "isurvq", "isurvj", "isurvjg"])
    def test_predictions_survive_reload(self, variant: str, tmp_path) -> None:
        model, test_set = trained(variant)
        path = str(tmp_path / f"{variant}.json")

        save_model(model, path)
        again = load_model(path)

        assert again.config == model.config
        assert again.history == model.history
        assert again.fine_tune_history == model.fine_tune_history
        assert np.array_equal(
            predict_distributions(again, test_set.features), predict_distributions(model, test_set.features)
        )

    def test_identical_bytes(self, tmp_path) -> None:
        model, _ = trained("isurvj")
        first = tmp_path / "a.json"
        second = tmp_path / "b.json"

        save_model(model, str(first))
        save_model(load_model(str(first)), str(second))

        assert first.read_bytes() == second.read_bytes()

    def test_wrong_format(self, tmp_path) -> None:
        model, _ = trained("isurvj")
        blob = model_to_dict(model)
        blob["format"] = "something-else"
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(blob))

        with pytest.raises(FormatError):
            load_model(str(path))

    def test_wrong_version(self, tmp_path) -> None:
        model, _ = trained("isurvj")
        blob = model_to_dict(model)
        blob["version"] = 99
        path = tmp_path / "v99.json"
        path.write_text(json.dumps(blob))

        with pytest.raises(FormatError):
            load_model(str(path))

    def test_missing_field(self, tmp_path) -> None:
        model, _ = trained("isurvj")
        blob = model_to_dict(model)
        del blob["pi_hat"]
        path = tmp_path / "partial.json"
        path.write_text(json.dumps(blob))

        with pytest.raises(FormatError):
            load_model(str(path))

    def test_not_json(self, tmp_path) -> None:
        path = tmp_path / "garbage.json"
        path.write_text("{not json")

        with pytest.raises(FormatError):
            read_json(str(path))

    def test_array_blob(self) -> None:
        a = np.array([[0.1, -2.5], [3.0, np.pi]])

        assert np.array_equal(decode_array(encode_array(a)), a)

        with pytest.raises(FormatError):
            decode_array({"dtype": "<f8", "shape": [2], "data": "!!"})


def mixed_table(n: int, seed: int) -> SurvivalTable:
    rng = np.random.default_rng(seed)
    frame = pd.DataFrame(
        {
            "weight": rng.normal(70.0, 12.0, n),
            "dose": rng.uniform(0.0, 5.0, n),
            "site": rng.choice(["north", "south", "east"], n),
        }
    )
    return SurvivalTable(frame, rng.uniform(0.5, 8.0, n), np.tile([1, 1, 0], n // 3 + 1)[:n])


class TestPreprocessorFiles:
    def test_predictions_survive_reload(self, tmp_path) -> None:
        raw_train, raw_test = mixed_table(30, 0), mixed_table(9, 1)
        preprocessor = fit_preprocessor(raw_train)
        train_set = preprocessor.apply(raw_train)
        grid = build_grid(train_set.times, train_set.events)
        labels = make_labels(grid, train_set.times, train_set.events)
        model = replace(train(train_set, grid, labels, ModelConfig(epochs=3, embed_dim=6, seed=2)), preprocessor=preprocessor)
        path = str(tmp_path / "mixed.json")

        save_model(model, path)
        again = load_model(path)

        assert again.preprocessor.feature_names == preprocessor.feature_names
        assert again.preprocessor.levels == preprocessor.levels
        X = preprocessor.apply(raw_test).features
        X_again = again.preprocessor.apply(raw_test).features
        assert np.array_equal(X_again, X)
        assert np.array_equal(predict_distributions(again, X_again), predict_distributions(model, X))

    def test_absent_preprocessor_is_null(self) -> None:
        model, _ = trained("isurvj")

        assert model_to_dict(model)["preprocessor"] is None

    def test_inconsistent_preprocessor(self, tmp_path) -> None:
        raw_train = mixed_table(30, 0)
        preprocessor = fit_preprocessor(raw_train)
        train_set = preprocessor.apply(raw_train)
        grid = build_grid(train_set.times, train_set.events)
        labels = make_labels(grid, train_set.times, train_set.events)
        model = replace(train(train_set, grid, labels, ModelConfig(epochs=0, embed_dim=6)), preprocessor=preprocessor)
        blob = model_to_dict(model)
        blob["preprocessor"]["levels"] = []
        path = tmp_path / "levels.json"
        path.write_text(json.dumps(blob))

        with pytest.raises(FormatError):
            load_model(str(path))


class TestCurveFiles:
    def test_long_format(self, tmp_path) -> None:
        model, test_set = trained("isurvj")
        x0 = test_set.features[0]
        lower, upper = model_interval_survival(model, x0)
        path = tmp_path / "curves" / "isurvj.csv"

        write_curves(str(path), [(0, lower, predict_survival(model, x0), upper)])
        df = pd.read_csv(path)

        assert list(df.columns) == ["instance", "time", "S_lower", "S", "S_upper"]
        assert len(df) == model.grid.T
        assert np.all(df["S_lower"] <= df["S"] + 1e-9)
        assert np.all(df["S"] <= df["S_upper"] + 1e-9)

    def test_wide_format(self, tmp_path) -> None:
        a = SurvivalCurve(np.array([0.0, 1.0]), np.array([1.0, 0.5]))
        b = SurvivalCurve(np.array([0.0, 2.0]), np.array([1.0, 0.2]))
        path = tmp_path / "table.csv"

        write_curve_table(str(path), {"a": a, "b": b})
        df = pd.read_csv(path)

        assert list(df.columns) == ["time", "a", "b"]
        assert list(df["time"]) == [0.0, 1.0, 2.0]
        assert list(df["b"]) == [1.0, 1.0, 0.2]


### END ###
