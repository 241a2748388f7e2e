from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from hyperpose.harness.dataset_io import make_dataset
from hyperpose.harness.evaluation import (
    evaluate_arrays,
    evaluate_checkpoint,
    evaluate_network,
    load_network,
)
from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.models.constants import AVG_ROW_LABEL, METRIC_COLUMNS
from hyperpose.network.parameters import save_checkpoint
from hyperpose.tests.testing_utils import stub_dataset, stub_run, stub_skeleton


class Test_evaluate_arrays:
    def test_ground_truth_as_prediction(self):
        gt = stub_dataset()["targets"].values
        report = evaluate_arrays(gt, gt, stub_skeleton())
        assert len(report.table) == 3 + 1
        for column in ("mpjpe", "n_mpjpe", "mpjve", "accel", "blc"):
            np.testing.assert_allclose(report.table[column], 0, atol=1e-9)

    def test_average_is_the_mean(self):
        gt = stub_dataset()["targets"].values
        pred = gt + np.arange(3)[:, None, None, None]
        report = evaluate_arrays(pred, gt, stub_skeleton(), ["a", "b", "c"])
        assert list(report.sequences.index) == ["a", "b", "c"]
        np.testing.assert_allclose(
            report.sequences["mpjpe"], np.sqrt(3) * np.arange(3)
        )
        assert report.average["mpjpe"] == pytest.approx(np.sqrt(3))

    def test_rejects_mismatched_arrays(self):
        with pytest.raises(InvalidHyperposeArgumentError):
            evaluate_arrays(np.zeros((1, 2, 5, 3)), np.zeros((1, 3, 5, 3)), None)


class Test_checkpoint_evaluation:
    @pytest.fixture(autouse=True)
    def trained(self, tmp_path):
        self.dataset = stub_dataset()
        self.run = stub_run(str(tmp_path), epochs=1)
        self.tmp_path = tmp_path

    def test_report_layout(self):
        report = evaluate_checkpoint(self.run.checkpoint_path, self.dataset)
        assert list(report.table.columns) == METRIC_COLUMNS
        assert list(report.table.index) == ["seq000", "seq001", "seq002", AVG_ROW_LABEL]
        assert report.average["mpjpe"] == pytest.approx(
            report.sequences["mpjpe"].mean()
        )
        diagnostics = report.table[["distortion", "map", "entropy"]].to_numpy()
        assert np.isfinite(diagnostics).all()

    def test_parallel_matches_sequential(self):
        network = load_network(self.run.checkpoint_path, self.dataset)
        parallel = evaluate_network(network, self.dataset, parallel=True)
        sequential = evaluate_network(network, self.dataset, parallel=False)
        pd.testing.assert_frame_equal(parallel.table, sequential.table)

    def test_checkpoint_reproduces_the_trained_network(self):
        from_disk = evaluate_checkpoint(self.run.checkpoint_path, self.dataset)
        in_memory = evaluate_network(self.run.network, self.dataset)
        # the checkpoint stores fp32 parameters
        assert from_disk.average["mpjpe"] == pytest.approx(
            in_memory.average["mpjpe"], rel=1e-4
        )

    def test_metric_csv_is_byte_identical_across_evaluations(self):
        paths = [self.tmp_path / "first.csv", self.tmp_path / "second.csv"]
        for path in paths:
            report = evaluate_checkpoint(self.run.checkpoint_path, self.dataset)
            report.to_csv(str(path))
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_precision_override(self):
        network = load_network(self.run.checkpoint_path, self.dataset, "fp32")
        assert network.params.dtype == np.float32
        assert not network.training

    def test_skeleton_mismatch(self):
        other = make_dataset(np.zeros((1, 4, 17, 3)), np.zeros((1, 4, 17, 3)))
        with pytest.raises(InvalidHyperposeArgumentError):
            evaluate_checkpoint(self.run.checkpoint_path, other)

    def test_sidecar_without_model(self):
        path = str(self.tmp_path / "bare.hpck")
        save_checkpoint(path, self.run.network.params, {})
        with pytest.raises(InvalidHyperposeArgumentError):
            load_network(path, self.dataset)
