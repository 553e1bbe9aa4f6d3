import math

import numpy as np
import pytest

from dlrec.encoding import (
    ColumnRole,
    EncodingError,
    build_schema,
    decode,
    encode,
    encode_partial,
    missing_code,
)
from dlrec.space import (
    ComponentSpec,
    Dimension,
    Kind,
    SearchSpace,
    configs_allclose,
    sample_config,
)


@pytest.fixture
def small_space():
    return SearchSpace(
        (
            ComponentSpec("skip", Dimension.MODEL_ARCHITECTURE, Kind.EXCLUSIVE, categories=("none", "residual")),
            ComponentSpec("act", Dimension.MODEL_ARCHITECTURE, Kind.EXCLUSIVE, categories=("A", "B", "C")),
            ComponentSpec("aug", Dimension.REGULARIZATION_GENERALIZATION, Kind.MULTI_SELECT, categories=("flip", "crop", "mixup")),
            ComponentSpec("lr", Dimension.TRAINING_OPTIMIZATION, Kind.CONTINUOUS, lo=1e-5, hi=1.0, log_scale=True),
            ComponentSpec("epochs", Dimension.TRAINING_OPTIMIZATION, Kind.INTEGER, lo=1, hi=100),
        )
    )


class TestBuildSchema:
    def test_two_value_exclusive_collapses_to_one_column(self, small_space):
        schema = build_schema(small_space)
        start, end = schema.component_span("skip")
        assert end - start == 1
        assert schema.columns[start].role is ColumnRole.BINARY

    def test_multi_category_exclusive_gets_label_column(self, small_space):
        schema = build_schema(small_space)
        start, end = schema.component_span("act")
        assert end - start == 1
        assert schema.columns[start].role is ColumnRole.LABEL

    def test_multi_select_expands_per_category(self, small_space):
        schema = build_schema(small_space)
        start, end = schema.component_span("aug")
        assert end - start == 3
        assert [c.category for c in schema.columns[start:end]] == ["flip", "crop", "mixup"]

    def test_augmentation_expands_to_23_columns(self, default_space, default_schema):
        start, end = default_schema.component_span("Data Augmentation")
        assert end - start == 23

    def test_range_components_get_one_numeric_column(self, default_schema):
        start, end = default_schema.component_span("Batch size")
        assert end - start == 1
        assert default_schema.columns[start].role is ColumnRole.NUMERIC

    def test_width_is_stable_across_builds(self, default_space):
        a = build_schema(default_space)
        b = build_schema(default_space)
        assert a.width == b.width == 89
        assert a.columns == b.columns
        assert a.fingerprint() == b.fingerprint()


class TestEncode:
    def test_label_code_follows_category_order(self, small_space):
        schema = build_schema(small_space)
        config = {"skip": "none", "act": "B", "aug": {"flip"}, "lr": 0.1, "epochs": 10}
        vec = encode(schema, config)
        start, _ = schema.component_span("act")
        assert vec[start] == 1.0

    def test_multi_hot_has_exactly_the_chosen_ones(self, default_space, default_schema):
        config = sample_config(default_space, np.random.default_rng(0))
        config["Data Augmentation"] = {"mixup", "cutmix"}
        vec = encode(default_schema, config)
        start, end = default_schema.component_span("Data Augmentation")
        assert vec[start:end].sum() == 2.0
        cats = default_space["Data Augmentation"].categories
        on = {cats[i] for i in range(23) if vec[start + i] == 1.0}
        assert on == {"mixup", "cutmix"}

    def test_log_scale_stores_natural_log(self, small_space):
        schema = build_schema(small_space)
        config = {"skip": "none", "act": "A", "aug": {"crop"}, "lr": 0.001, "epochs": 5}
        vec = encode(schema, config)
        start, _ = schema.component_span("lr")
        assert vec[start] == pytest.approx(math.log(0.001), rel=1e-9)
        assert vec[start] == pytest.approx(-6.9078, abs=1e-4)

    def test_unknown_label_raises(self, small_space):
        schema = build_schema(small_space)
        config = {"skip": "none", "act": "Z", "aug": {"crop"}, "lr": 0.1, "epochs": 5}
        with pytest.raises(EncodingError):
            encode(schema, config)

    def test_missing_component_raises(self, small_space):
        schema = build_schema(small_space)
        with pytest.raises(EncodingError, match="lacks component"):
            encode(schema, {"skip": "none"})

    def test_injective_on_distinct_configs(self, default_space, default_schema):
        rng = np.random.default_rng(1)
        seen = {}
        for _ in range(200):
            config = sample_config(default_space, rng)
            key = encode(default_schema, config).tobytes()
            assert key not in seen
            seen[key] = config


class TestDecode:
    def test_round_trip_on_random_configs(self, default_space, default_schema):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            config = sample_config(default_space, rng)
            back = decode(default_schema, encode(default_schema, config))
            assert configs_allclose(default_space, config, back, rel_tol=1e-12)

    def test_label_column_rounds_to_nearest_code(self, small_space):
        schema = build_schema(small_space)
        vec = encode(schema, {"skip": "none", "act": "A", "aug": {"flip"}, "lr": 0.1, "epochs": 5})
        start, _ = schema.component_span("act")
        vec[start] = 1.4
        assert decode(schema, vec)["act"] == "B"
        vec[start] = 99.0
        assert decode(schema, vec)["act"] == "C"

    def test_range_column_clamps(self, small_space):
        schema = build_schema(small_space)
        vec = encode(schema, {"skip": "none", "act": "A", "aug": {"flip"}, "lr": 0.1, "epochs": 5})
        start, _ = schema.component_span("lr")
        vec[start] = math.log(1e-5) - 50.0
        assert decode(schema, vec)["lr"] == 1e-5

    def test_all_zero_multi_select_block_promotes_largest(self, small_space):
        schema = build_schema(small_space)
        vec = encode(schema, {"skip": "none", "act": "A", "aug": {"flip"}, "lr": 0.1, "epochs": 5})
        start, end = schema.component_span("aug")
        vec[start:end] = [0.1, 0.35, 0.2]
        assert decode(schema, vec)["aug"] == {"crop"}

    def test_binary_column_thresholds_at_half(self, small_space):
        schema = build_schema(small_space)
        vec = encode(schema, {"skip": "none", "act": "A", "aug": {"flip"}, "lr": 0.1, "epochs": 5})
        start, _ = schema.component_span("skip")
        vec[start] = 0.49
        assert decode(schema, vec)["skip"] == "none"
        vec[start] = 0.5
        assert decode(schema, vec)["skip"] == "residual"

    def test_wrong_width_raises(self, small_space):
        schema = build_schema(small_space)
        with pytest.raises(EncodingError, match="width"):
            decode(schema, np.zeros(schema.width + 1))


class TestMissingValues:
    def test_partial_encoding_marks_missing_as_nan(self, small_space):
        schema = build_schema(small_space)
        vec = encode_partial(schema, {"act": "C", "lr": 0.5})
        start, _ = schema.component_span("act")
        assert vec[start] == 2.0
        skip_start, _ = schema.component_span("skip")
        assert np.isnan(vec[skip_start])
        aug_start, aug_end = schema.component_span("aug")
        assert np.isnan(vec[aug_start:aug_end]).all()

    def test_missing_label_code_appends_after_categories(self, small_space):
        assert missing_code(small_space["act"]) == 3.0
        assert missing_code(small_space["skip"]) == 2.0
