import math

import numpy as np
import pytest

from dlrec import forest as forest_mod
from dlrec.dataset import ModelRecord, TabularDataset, save_csv
from dlrec.encoding import build_schema, encode
from dlrec.errors import ValidationFailure
from dlrec.pipeline import predict_config, recommend, write_report
from dlrec.space import (
    ComponentSpec,
    Dimension,
    Kind,
    SearchSpace,
    default_space,
    sample_config,
    save_config,
    save_space,
    validate,
)


@pytest.fixture(scope="module")
def epochs_batch_csv(tmp_path_factory):
    """Synthetic dataset where only epochs and batch size move accuracy."""
    space = default_space()
    rng = np.random.default_rng(0)
    records = []
    for _ in range(120):
        config = sample_config(space, rng)
        y = 50.0
        y += 18.0 * math.log(config["Epochs"] / 20.0) / math.log(250.0)
        y -= 14.0 * ((math.log2(config["Batch size"]) - 8.0) / 5.0) ** 2
        y += rng.normal(0.0, 0.2)
        records.append(ModelRecord(values=config, top1_accuracy=float(np.clip(y, 1, 99))))
    path = tmp_path_factory.mktemp("data") / "epochs_batch.csv"
    save_csv(TabularDataset(space=space, records=tuple(records)), str(path))
    return str(path)


class TestRecommendAuto:
    def test_confirms_the_driving_components(self, epochs_batch_csv):
        report = recommend(
            epochs_batch_csv, mode="auto", budget=5, n_init=5, seed=0,
            importance_repeats=3, candidate_budget=256,
        )
        assert {"Epochs", "Batch size"} <= set(report.searched_components)
        assert len(report.searched_components) == 5
        assert report.importance_ranking is not None
        assert report.importance_ranking[0][0] in {"Epochs", "Batch size"}

    def test_recommendation_validates_and_prediction_is_fresh(self, epochs_batch_csv):
        report = recommend(
            epochs_batch_csv, budget=5, n_init=5, seed=1,
            importance_repeats=3, candidate_budget=256,
        )
        space = default_space()
        assert validate(space, report.recommended).ok
        # re-derive the same forest and confirm no staleness
        from dlrec.dataset import load_csv
        from dlrec.pipeline import train_predictor

        ds = load_csv(epochs_batch_csv, space)
        schema = build_schema(space)
        model, _ = train_predictor(ds, schema, seed=1)
        assert report.predicted_top1 == forest_mod.predict(
            model, encode(schema, report.recommended)
        )

    def test_end_to_end_reproducible(self, epochs_batch_csv):
        kwargs = dict(budget=4, n_init=4, seed=7, importance_repeats=2, candidate_budget=128)
        a = recommend(epochs_batch_csv, **kwargs)
        b = recommend(epochs_batch_csv, **kwargs)
        space = default_space()
        assert a.to_dict(space) == b.to_dict(space)


class TestRecommendManual:
    def test_searches_exactly_the_requested_components(self, bundled_dataset_path):
        wanted = ["Epochs", "Batch size", "Data Augmentation"]
        report = recommend(
            bundled_dataset_path, mode="manual", manual_components=wanted,
            budget=4, n_init=4, seed=0, candidate_budget=128,
        )
        assert report.searched_components == wanted
        assert report.importance_ranking is None
        space = default_space()
        assert validate(space, report.recommended).ok

    def test_manual_mode_requires_components(self, bundled_dataset_path):
        with pytest.raises(ValidationFailure, match="manual"):
            recommend(bundled_dataset_path, mode="manual", budget=2, n_init=2)

    def test_unknown_manual_component_rejected(self, bundled_dataset_path):
        with pytest.raises(ValidationFailure, match="not components"):
            recommend(
                bundled_dataset_path, mode="manual", manual_components=["Clock speed"],
                budget=2, n_init=2,
            )

    def test_fixed_overlap_rejected(self, bundled_dataset_path):
        with pytest.raises(ValidationFailure, match="both searched and fixed"):
            recommend(
                bundled_dataset_path, mode="manual", manual_components=["Epochs"],
                fixed={"Epochs": 100}, budget=2, n_init=2,
            )

    def test_user_fixed_values_survive(self, bundled_dataset_path):
        report = recommend(
            bundled_dataset_path, mode="manual", manual_components=["Epochs"],
            fixed={"Batch size": 1024, "Framework": "PyTorch"},
            budget=3, n_init=3, seed=0, candidate_budget=64,
        )
        assert report.recommended["Batch size"] == 1024
        assert report.recommended["Framework"] == "PyTorch"

    def test_budget_zero_warns_and_returns_best_init(self, bundled_dataset_path, caplog):
        with caplog.at_level("WARNING"):
            report = recommend(
                bundled_dataset_path, mode="manual", manual_components=["Epochs"],
                budget=0, n_init=4, seed=0, candidate_budget=64,
            )
        assert "budget is 0" in caplog.text
        assert validate(default_space(), report.recommended).ok

    def test_mode_fixed_policy_available(self, bundled_dataset_path):
        report = recommend(
            bundled_dataset_path, mode="manual", manual_components=["Epochs"],
            budget=2, n_init=3, seed=0, candidate_budget=64, fixed_policy="mode",
        )
        assert validate(default_space(), report.recommended).ok

    def test_history_written(self, bundled_dataset_path, tmp_path):
        path = tmp_path / "history.jsonl"
        recommend(
            bundled_dataset_path, mode="manual", manual_components=["Epochs"],
            budget=3, n_init=3, seed=0, candidate_budget=64, history_path=str(path),
        )
        assert len(path.read_text().splitlines()) == 6


class TestReportDocument:
    def test_report_yaml_round_trips(self, bundled_dataset_path, tmp_path):
        import yaml

        report = recommend(
            bundled_dataset_path, mode="manual", manual_components=["Epochs"],
            budget=2, n_init=3, seed=0, candidate_budget=64,
        )
        space = default_space()
        path = tmp_path / "report.yaml"
        write_report(report, space, str(path))
        doc = yaml.safe_load(path.read_text())
        assert doc["predicted_top1"] == report.predicted_top1
        assert doc["predicted_top1_rounded"] == round(report.predicted_top1, 2)
        assert doc["searched_components"] == ["Epochs"]
        assert doc["recommended"]["Epochs"] == report.recommended["Epochs"]


@pytest.fixture
def tiny_setup(tmp_path):
    """Small space + interpolating single-tree model, all persisted."""
    space = SearchSpace(
        (
            ComponentSpec("opt", Dimension.TRAINING_OPTIMIZATION, Kind.EXCLUSIVE, categories=("sgd", "adam", "lamb")),
            ComponentSpec("lr", Dimension.TRAINING_OPTIMIZATION, Kind.CONTINUOUS, lo=1e-4, hi=1.0, log_scale=True),
            ComponentSpec("epochs", Dimension.TRAINING_OPTIMIZATION, Kind.INTEGER, lo=1, hi=500),
        )
    )
    schema = build_schema(space)
    configs = [
        {"opt": "sgd", "lr": 0.1, "epochs": 90},
        {"opt": "adam", "lr": 0.001, "epochs": 300},
        {"opt": "lamb", "lr": 0.01, "epochs": 120},
        {"opt": "adam", "lr": 0.0005, "epochs": 40},
    ]
    ys = [61.0, 78.32, 70.5, 66.25]
    X = np.vstack([encode(schema, c) for c in configs])
    model = forest_mod.fit_forest(
        np.asarray(X), np.asarray(ys), 1, 32, seed=0, bootstrap=False,
        feature_subsample=X.shape[1], schema=schema,
    )
    space_path = tmp_path / "space.yaml"
    model_path = tmp_path / "model.npz"
    save_space(space, str(space_path))
    forest_mod.save(model, str(model_path))
    return space, schema, configs, ys, str(space_path), str(model_path), tmp_path


class TestPredictConfig:
    def test_training_record_predicts_its_own_accuracy(self, tiny_setup):
        space, _, configs, ys, space_path, model_path, tmp_path = tiny_setup
        config_path = tmp_path / "config.yaml"
        save_config(configs[1], space, str(config_path))
        value = predict_config(model_path, str(config_path), space_path)
        assert value == 78.32

    def test_same_inputs_same_output(self, tiny_setup):
        space, _, configs, _, space_path, model_path, tmp_path = tiny_setup
        config_path = tmp_path / "config.yaml"
        save_config(configs[0], space, str(config_path))
        assert predict_config(model_path, str(config_path), space_path) == predict_config(
            model_path, str(config_path), space_path
        )

    def test_fingerprint_mismatch_rejected(self, tiny_setup):
        space, _, configs, _, _, model_path, tmp_path = tiny_setup
        config_path = tmp_path / "config.yaml"
        save_config(configs[0], space, str(config_path))
        with pytest.raises(forest_mod.ShapeError, match="schema"):
            predict_config(model_path, str(config_path))  # default space: wrong schema

    def test_invalid_config_rejected(self, tiny_setup):
        space, _, configs, _, space_path, model_path, tmp_path = tiny_setup
        bad = dict(configs[0])
        bad["lr"] = 99.0
        config_path = tmp_path / "bad.yaml"
        save_config(bad, space, str(config_path))
        with pytest.raises(ValidationFailure, match="invalid"):
            predict_config(model_path, str(config_path), space_path)
