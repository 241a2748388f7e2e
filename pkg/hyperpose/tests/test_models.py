from __future__ import annotations

import numpy as np
import pytest

from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.models.ablation import AblationRegistry
from hyperpose.models.hop_convention import HopConventionRegistry
from hyperpose.models.model_config import ModelConfig
from hyperpose.models.precision import PrecisionRegistry
from hyperpose.models.stability_config import StabilityConfig
from hyperpose.models.train_config import TrainConfig
from hyperpose.utils import build_config, read_config_file


class Test_registries:
    def test_precision_lookup(self):
        assert PrecisionRegistry.lookup("FP32").dtype == np.float32
        assert PrecisionRegistry.lookup("float64").name == "fp64"
        assert PrecisionRegistry.names() == ["fp32", "fp64"]

    def test_precision_of_an_array(self):
        assert PrecisionRegistry.of(np.zeros(2)).name == "fp64"
        assert PrecisionRegistry.of(np.zeros(2, dtype=np.float32)).name == "fp32"

    def test_lookup_returns_copies(self):
        item = PrecisionRegistry.lookup("fp64")
        item.drift_tol = 1.0
        assert PrecisionRegistry.lookup("fp64").drift_tol != 1.0

    def test_unknown_item(self):
        with pytest.raises(InvalidHyperposeArgumentError):
            HopConventionRegistry.lookup("geodesic")
        assert HopConventionRegistry.lookup("geodesic", no_error=True) is None


class Test_ModelConfig:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"d": 0},
            {"d": 15},
            {"temporal_windows": (3, 9)},
            {"temporal_windows": (0, 3, 9)},
            {"dropout": 1.0},
            {"attention_kind": "spherical"},
            {"r_q": 20.0},
            {"hop_convention": "square"},
        ],
    )
    def test_invalid(self, overrides):
        with pytest.raises(InvalidHyperposeArgumentError):
            ModelConfig(**overrides)

    def test_derived_sizes(self):
        config = ModelConfig(d=64, heads=4, mlp_ratio=2)
        assert config.d_head == 16
        assert config.d_ff == 128

    def test_velocity_needs_stream_and_penalty(self):
        assert ModelConfig().uses_velocity
        assert not ModelConfig(use_velocity_stream=False).uses_velocity
        assert not ModelConfig(use_velocity_penalty=False).uses_velocity

    @pytest.mark.parametrize(
        "window, frames, expected", [(27, 9, 8), (3, 9, 3), (5, 1, 0)]
    )
    def test_effective_window(self, window, frames, expected):
        assert ModelConfig().effective_window(window, frames) == expected

    def test_dict_round_trip(self):
        config = ModelConfig(hop_convention="RAW_POWER", shared_lambda=True)
        assert config.hop_convention == "raw_power"
        assert ModelConfig.from_dict(config.to_dict()) == config

    def test_unknown_key(self):
        with pytest.raises(InvalidHyperposeArgumentError):
            ModelConfig.from_dict({"depth": 3})


class Test_TrainConfig:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"lr": 0.0},
            {"batch_size": 0},
            {"lr_floor": 2.0},
            {"validation_fraction": 1.0},
            {"curriculum_full": 9},
            {"precision": "fp16"},
        ],
    )
    def test_invalid(self, overrides):
        with pytest.raises(InvalidHyperposeArgumentError):
            TrainConfig(**overrides)

    def test_dtype(self):
        assert TrainConfig(precision="FP64").dtype == np.float64


class Test_StabilityConfig:
    def test_for_precision(self):
        config = StabilityConfig.for_precision(PrecisionRegistry.FP32, r_q=2.0)
        assert config.drift_tol == PrecisionRegistry.FP32.drift_tol
        assert config.r_q == 2.0

    def test_tolerance_override(self):
        config = StabilityConfig.for_precision(PrecisionRegistry.FP64, drift_tol=0.5)
        assert config.drift_tol == 0.5

    @pytest.mark.parametrize(
        "overrides", [{"eps": 0.0}, {"r_q": 16.0}, {"drift_tol": 0.0}]
    )
    def test_invalid(self, overrides):
        with pytest.raises(InvalidHyperposeArgumentError):
            StabilityConfig(**overrides)


class Test_ablations:
    def test_every_ablation_builds_valid_configs(self):
        for name in AblationRegistry.names():
            ablation = AblationRegistry.lookup(name)
            model, train = ablation.apply(ModelConfig(), TrainConfig())
            assert isinstance(model, ModelConfig)
            assert isinstance(train, TrainConfig)

    def test_single_window_covers_every_block(self):
        ablation = AblationRegistry.lookup("single_window_5")
        config = ModelConfig(spatial_layers=2, temporal_windows=(1, 2))
        model, _ = ablation.apply(config, TrainConfig())
        assert model.temporal_windows == (5, 5)

    def test_loss_ablation_leaves_the_model(self):
        model, train = AblationRegistry.lookup("fixed_weights").apply(
            ModelConfig(), TrainConfig()
        )
        assert model == ModelConfig()
        assert not train.learn_weights


class Test_config_file:
    def test_absent_file_gives_empty_sections(self):
        assert read_config_file(None) == {
            "model": {},
            "train": {},
            "synth": {},
            "stability": {},
        }

    def test_sections(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text("model:\n  d: 32\ntrain:\n")
        sections = read_config_file(str(path))
        assert sections["model"] == {"d": 32}
        assert sections["train"] == {}

    @pytest.mark.parametrize("text", ["- model\n", "optimizer:\n  lr: 1\n"])
    def test_malformed(self, tmp_path, text):
        path = tmp_path / "config.yaml"
        path.write_text(text)
        with pytest.raises(InvalidHyperposeArgumentError):
            read_config_file(str(path))

    def test_build_config_overrides(self):
        config = build_config(
            TrainConfig, {"lr": 0.1, "epochs": 3}, lr=0.2, seed=None
        )
        assert config.lr == 0.2 and config.epochs == 3 and config.seed == 0

    def test_build_config_unknown_field(self):
        with pytest.raises(InvalidHyperposeArgumentError):
            build_config(TrainConfig, {"momentum": 0.9})
