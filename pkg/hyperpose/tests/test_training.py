from __future__ import annotations

import os

import numpy as np
import pandas as pd
import pytest
import yaml

from hyperpose.harness.dataset_io import make_dataset
from hyperpose.harness.evaluation import evaluate_checkpoint
from hyperpose.harness.synthetic import synthesize
from hyperpose.harness.training import (
    CHECKPOINT_NAME,
    DRIFT_LOG_NAME,
    TRAIN_LOG_NAME,
    predict,
    train_model,
)
from hyperpose.hyperpose_exceptions import NonFiniteError, ShapeMismatchError
from hyperpose.metrics.pose_metrics import mpjpe
from hyperpose.models.constants import DRIFT_LOG_COLUMNS, TRAIN_LOG_COLUMNS
from hyperpose.models.model_config import ModelConfig
from hyperpose.network.parameters import load_checkpoint
from hyperpose.tests.testing_utils import (
    stub_dataset,
    stub_model_config,
    stub_run,
    stub_spec,
    stub_train_config,
)


class Test_train_model:
    def test_log_and_outputs(self, tmp_path):
        run = stub_run(str(tmp_path))
        assert list(run.log.columns) == TRAIN_LOG_COLUMNS
        assert list(run.log["epoch"]) == [0, 1]
        # 3 sequences in batches of 2
        assert list(run.log["step"]) == [2, 4]
        assert run.log["val_mpjpe"].min() == pytest.approx(run.best_val_mpjpe)
        assert run.checkpoint_path == os.path.join(str(tmp_path), CHECKPOINT_NAME)
        written = pd.read_csv(tmp_path / TRAIN_LOG_NAME)
        assert list(written.columns) == TRAIN_LOG_COLUMNS
        drift = pd.read_csv(tmp_path / DRIFT_LOG_NAME)
        assert list(drift.columns) == DRIFT_LOG_COLUMNS

    def test_checkpoint_sidecar(self, tmp_path):
        run = stub_run(str(tmp_path))
        state, metadata = load_checkpoint(run.checkpoint_path)
        assert metadata["precision"] == "fp64"
        assert metadata["epoch"] == run.best_epoch
        assert metadata["model"]["d"] == 16
        assert set(state) == set(run.network.params.names())

    def test_without_output_dir(self):
        run = stub_run()
        assert run.checkpoint_path is None and run.log_path is None
        assert run.best_epoch in (0, 1)

    def test_drift_is_recorded_per_lift(self):
        run = stub_run(epochs=1)
        # 2 steps, 2 blocks, q and k
        assert len(run.drift) == 2 * 2 * 2
        assert run.drift["drift"].max() < 1e-12
        assert run.log["drift"].iloc[0] == run.drift["drift"].max()

    def test_drift_watch_can_be_disabled(self):
        run = train_model(
            stub_dataset(),
            stub_model_config(),
            stub_train_config(epochs=1),
            watch_drift=False,
        )
        assert run.drift is None
        assert run.log["drift"].iloc[0] == 0
        assert np.isnan(run.log["log10_drift"].iloc[0])

    def test_drift_watch_leaves_the_parameters(self):
        runs = [
            train_model(
                stub_dataset(),
                stub_model_config(),
                stub_train_config(epochs=2, hflip=True, confidence_dropout=True),
                watch_drift=watch,
            )
            for watch in (True, False)
        ]
        watched, blind = (run.network.params.state() for run in runs)
        assert watched.keys() == blind.keys()
        for name, values in watched.items():
            np.testing.assert_array_equal(values, blind[name], err_msg=name)
        for name, values in runs[0].loss.params.state().items():
            np.testing.assert_array_equal(values, runs[1].loss.params.state()[name])
        pd.testing.assert_series_equal(
            runs[0].log["loss_total"], runs[1].log["loss_total"], check_exact=True
        )

    def test_fp32_desk_run_stays_on_the_manifold(self):
        run = train_model(
            stub_dataset(),
            stub_model_config(d=64, heads=4),
            stub_train_config(epochs=2, precision="fp32"),
        )
        assert run.network.params.dtype == np.float32
        assert len(run.drift) > 0
        assert run.drift["drift"].max() <= 1e-2
        assert run.log["drift"].max() <= 1e-2

    def test_callback_reports_progress(self):
        progress = []
        train_model(
            stub_dataset(),
            stub_model_config(),
            stub_train_config(),
            callback=progress.append,
        )
        assert progress == [50.0, 100.0]

    def test_validation_split(self):
        run = stub_run(epochs=1, validation_fraction=1 / 3)
        assert list(run.log["step"]) == [1]

    def test_divergence_names_the_step(self):
        clean = stub_dataset()
        ds = make_dataset(
            clean["inputs"].values,
            np.full(clean["targets"].shape, np.nan),
            skeleton=clean.attrs["skeleton"],
        )
        with pytest.raises(NonFiniteError) as e:
            stub_run(dataset=ds, epochs=1)
        assert e.value.step == 0
        assert e.value.tensor_name is not None

    def test_skeleton_must_fit_the_model(self):
        ds = make_dataset(np.zeros((2, 8, 17, 3)), np.zeros((2, 8, 17, 3)))
        with pytest.raises(ShapeMismatchError):
            stub_run(dataset=ds)

    def test_predict(self):
        run = stub_run(epochs=1)
        inputs = stub_dataset()["inputs"].values
        pred = predict(run.network, inputs, batch_size=2)
        assert pred.shape == (3, 8, 5, 3)
        np.testing.assert_allclose(pred[2], run.network(inputs[2]).data)


@pytest.mark.slow
class Test_training_runs:
    def test_fp64_runs_are_reproducible(self, tmp_path):
        first = stub_run(str(tmp_path / "a"), epochs=3, hflip=True)
        second = stub_run(str(tmp_path / "b"), epochs=3, hflip=True)
        pd.testing.assert_frame_equal(
            first.log.drop(columns="wall_time"),
            second.log.drop(columns="wall_time"),
            check_exact=True,
        )
        with open(first.checkpoint_path, "rb") as a, open(
            second.checkpoint_path, "rb"
        ) as b:
            assert a.read() == b.read()
        dataset = stub_dataset()
        reports = []
        for run, name in ((first, "a.csv"), (second, "b.csv")):
            path = tmp_path / name
            evaluate_checkpoint(run.checkpoint_path, dataset).to_csv(str(path))
            reports.append(path.read_bytes())
        assert reports[0] == reports[1]

    def test_loss_decreases_on_a_single_sequence(self):
        ds = synthesize(stub_spec(sequences=1))
        run = stub_run(dataset=ds, epochs=40, batch_size=1, lr=1e-2)
        assert run.log["loss_mpjpe"].iloc[-1] < run.log["loss_mpjpe"].iloc[0]

    def test_overfits_four_sequences(self):
        dataset = synthesize(stub_spec(frames=27, sequences=4))
        warmup = 5
        run = train_model(
            dataset,
            ModelConfig(joints=5, frames=27, dropout=0.0),
            stub_train_config(
                epochs=200, batch_size=1, lr=1e-3, warmup_epochs=warmup
            ),
        )
        pred = predict(run.network, dataset["inputs"].values, batch_size=4)
        assert mpjpe(pred, dataset["targets"].values) < 5.0
        # mean training MPJPE of consecutive 10-epoch windows after warmup
        curve = run.log["loss_mpjpe"].to_numpy()[warmup:]
        windows = curve[: len(curve) // 10 * 10].reshape(-1, 10).mean(axis=1)
        assert np.all(np.diff(windows) <= 0)

    def test_sidecar_is_yaml(self, tmp_path):
        run = stub_run(str(tmp_path), epochs=1)
        with open(f"{run.checkpoint_path}.config.yaml") as f:
            metadata = yaml.safe_load(f)
        assert metadata["train"]["seed"] == 0
