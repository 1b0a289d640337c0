"""Tests for experiment configuration validation."""

import pytest
from pydantic import ValidationError

from rq_rate_control.control.budget import RateControlConfig
from rq_rate_control.estimation import EstimatorVariant
from rq_rate_control.exceptions import ConfigError
from rq_rate_control.prediction.base import QualityGrid
from rq_rate_control.schemas import (
    ExperimentConfig,
    RateControlSettings,
    SequenceFileRef,
    SyntheticSequenceSpec,
    load_experiment_config,
)
from tests.utils import write_config


def _raw(**overrides):
    raw = {
        "schema_version": 1,
        "sequences": [{"name": "a"}],
        "methods": ["fusion"],
        "seeds": [0],
    }
    raw.update(overrides)
    return raw


class TestExperimentConfig:
    """Schema of the experiment file."""

    def test_defaults(self):
        config = ExperimentConfig.model_validate(_raw())
        assert config.methods == [EstimatorVariant.FUSION]
        assert config.anchor_levels == [10.0, 25.0, 40.0, 55.0]
        assert config.protocol == "closed_loop"
        assert config.predictor.kind == "synthetic"
        assert config.predictor.calibrate_to_pct == pytest.approx(16.87)
        assert config.rate_control.weights == [1.9, 1.6, 1.3, 1.0]

    def test_sequence_union(self):
        config = ExperimentConfig.model_validate(
            _raw(sequences=[{"name": "a", "content": "textured"}, {"path": "x.json"}])
        )
        assert isinstance(config.sequences[0], SyntheticSequenceSpec)
        assert isinstance(config.sequences[1], SequenceFileRef)

    @pytest.mark.parametrize("overrides", [
        {"methods": []},
        {"seeds": []},
        {"sequences": []},
        {"target_bits": [100.0, 0.0]},
        {"anchor_levels": [70.0]},
        {"protocol": "open_loop"},
        {"schema_version": 2},
    ])
    def test_rejects(self, overrides):
        with pytest.raises(ValidationError):
            ExperimentConfig.model_validate(_raw(**overrides))

    def test_unknown_content_class(self):
        with pytest.raises(ValidationError):
            SyntheticSequenceSpec(name="a", content="cartoon")

    def test_bad_sequence_name(self):
        with pytest.raises(ValidationError):
            SyntheticSequenceSpec(name="has space")


class TestSequenceSpec:
    """Mean frame profile of a configured sequence."""

    def test_content_class_base(self):
        base = SyntheticSequenceSpec(name="a", content="high_motion").base_profile()
        assert (base.true_alpha, base.true_beta) == (16.0, -150.0)

    def test_explicit_values_override_content(self):
        spec = SyntheticSequenceSpec(name="a", content="low_motion", true_alpha=10.0,
                                     noise_sigma=0.0)
        base = spec.base_profile()
        assert base.true_alpha == 10.0
        assert base.true_beta == -70.0
        assert base.noise_sigma == 0.0

    def test_excessive_mismatch(self):
        with pytest.raises(ValueError):
            SyntheticSequenceSpec(name="a", mismatch=10.0).base_profile()


def test_rate_control_settings_to_config():
    cfg = RateControlSettings(sliding_window=8).to_config(
        EstimatorVariant.HISTORY_ONLY, QualityGrid(), gop_length=16
    )
    assert isinstance(cfg, RateControlConfig)
    assert cfg.variant is EstimatorVariant.HISTORY_ONLY
    assert cfg.sliding_window == 8
    assert cfg.gop_length == 16


class TestLoadConfig:
    """Reading configuration files."""

    def test_valid(self, tmp_path):
        config = load_experiment_config(write_config(tmp_path / "c.json"))
        assert config.seeds == [3]

    def test_field_path(self, tmp_path):
        path = write_config(tmp_path / "c.json", rate_control={"sliding_window": 0})
        with pytest.raises(ConfigError) as exc_info:
            load_experiment_config(path)
        assert exc_info.value.field == "rate_control.sliding_window"
        assert str(exc_info.value).startswith("rate_control.sliding_window: ")

    @pytest.mark.parametrize("rate_control", [
        {"minigop_len": 3},
        {"weights": [1.0, 1.0]},
        {"weights": [1.9, 1.6, 0.0, 1.0]},
    ])
    def test_minigop_weights_checked(self, tmp_path, rate_control):
        path = write_config(tmp_path / "c.json", rate_control=rate_control)
        with pytest.raises(ConfigError) as exc_info:
            load_experiment_config(path)
        assert exc_info.value.field == "rate_control"

    def test_consistent_minigop_accepted(self, tmp_path):
        path = write_config(tmp_path / "c.json",
                            rate_control={"minigop_len": 2, "weights": [2.0, 1.0]})
        assert load_experiment_config(path).rate_control.minigop_len == 2

    @pytest.mark.parametrize("grid", [[10, 17, 17, 60], [60, 43, 17, 10], [10, 17, 43, 70]])
    def test_predictor_grid_checked(self, tmp_path, grid):
        path = write_config(tmp_path / "c.json", predictor={"grid": grid})
        with pytest.raises(ConfigError) as exc_info:
            load_experiment_config(path)
        assert exc_info.value.field == "predictor.grid"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_experiment_config(tmp_path / "absent.json")

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("[1,", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_experiment_config(path)
