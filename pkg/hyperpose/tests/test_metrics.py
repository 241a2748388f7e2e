from __future__ import annotations

import numpy as np
import pytest

from hyperpose.geometry import lorentz_core
from hyperpose.harness.synthetic import euler_to_matrix
from hyperpose.hyperpose_exceptions import (
    InvalidHyperposeArgumentError,
    ShapeMismatchError,
)
from hyperpose.kinematics.skeleton import load_skeleton
from hyperpose.metrics.diagnostics import (
    distortion_ratio,
    map_retrieval,
    pairwise_geodesic,
)
from hyperpose.metrics.pose_metrics import (
    DegenerateAlignmentWarning,
    accel_error,
    blc,
    mpjpe,
    mpjve,
    n_mpjpe,
    optimal_scale,
    p_mpjpe,
    procrustes_align,
)
from hyperpose.metrics.report import build_report, sequence_metrics
from hyperpose.models.constants import AVG_ROW_LABEL, METRIC_COLUMNS
from hyperpose.models.metric_report import MetricReport
from hyperpose.tests.testing_utils import CHAIN_DOCUMENT, stub_skeleton

ROTATION = euler_to_matrix(np.array([0.4, 1.2, -0.9]))


def random_poses(seed=0, frames=4, joints=5):
    return np.random.default_rng(seed).normal(0, 150, size=(frames, joints, 3))


class Test_pose_errors:
    def test_mpjpe_known_value(self):
        gt = np.zeros((2, 3))
        pred = np.array([[0, 0, 2.0], [1, 0, 0]])
        assert mpjpe(pred, gt) == pytest.approx(1.5)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            mpjpe(np.zeros((4, 3)), np.zeros((5, 3)))

    def test_planted_similarity_is_recovered(self):
        gt = random_poses()
        pred = 1.7 * gt @ ROTATION + np.array([10.0, -40, 3])
        alignment = procrustes_align(pred, gt)
        np.testing.assert_allclose(alignment.aligned, gt, atol=1e-8)
        np.testing.assert_allclose(alignment.scale, 1 / 1.7)
        np.testing.assert_allclose(np.linalg.det(alignment.rotation), 1)
        assert not alignment.degenerate.any()
        assert p_mpjpe(pred, gt) < 1e-8

    def test_reflection_is_not_used(self):
        gt = random_poses(1)
        mirrored = gt * np.array([-1.0, 1, 1])
        alignment = procrustes_align(mirrored, gt)
        np.testing.assert_allclose(np.linalg.det(alignment.rotation), 1)
        assert p_mpjpe(mirrored, gt) > 1.0

    def test_ordering_on_noisy_similarity(self):
        gt = random_poses(2, frames=6)
        noise = np.random.default_rng(3).normal(0, 5, size=gt.shape)
        pred = 1.3 * gt @ ROTATION + noise
        assert p_mpjpe(pred, gt) <= n_mpjpe(pred, gt) <= mpjpe(pred, gt)

    def test_ordering_over_random_similarities(self):
        rng = np.random.default_rng(20)
        for seed in range(200):
            gt = random_poses(seed, frames=int(rng.integers(1, 8)))
            angles = rng.uniform(0.2, 0.6, size=3) * rng.choice([-1.0, 1.0], size=3)
            scale = rng.choice([rng.uniform(0.5, 0.8), rng.uniform(1.25, 1.6)])
            noise = rng.normal(0, 5, size=gt.shape)
            pred = scale * gt @ euler_to_matrix(angles) + noise
            aligned, scaled, raw = p_mpjpe(pred, gt), n_mpjpe(pred, gt), mpjpe(pred, gt)
            assert aligned <= scaled <= raw, seed

    def test_n_mpjpe_removes_scale(self):
        gt = random_poses(4)
        scale, degenerate = optimal_scale(2 * gt, gt)
        np.testing.assert_allclose(scale, 0.5)
        assert not degenerate.any()
        assert n_mpjpe(2 * gt, gt) < 1e-9

    def test_zero_prediction_warns(self):
        gt = random_poses(5)
        with pytest.warns(DegenerateAlignmentWarning):
            value = n_mpjpe(np.zeros_like(gt), gt)
        assert value == pytest.approx(mpjpe(np.zeros_like(gt), gt))

    def test_collapsed_prediction_is_not_aligned(self):
        gt = random_poses(6, frames=1)
        pred = np.ones_like(gt)
        with pytest.warns(DegenerateAlignmentWarning):
            alignment = procrustes_align(pred, gt)
        assert alignment.degenerate.all()
        np.testing.assert_array_equal(alignment.aligned, pred)
        np.testing.assert_array_equal(alignment.rotation[0], np.eye(3))


class Test_temporal_errors:
    def test_constant_offset(self):
        gt = random_poses(7, frames=5)
        assert mpjve(gt + 25.0, gt) == pytest.approx(0, abs=1e-9)
        assert accel_error(gt + 25.0, gt) == pytest.approx(0, abs=1e-9)

    def test_linear_drift(self):
        gt = random_poses(8, frames=5)
        drift = np.arange(5)[:, None, None] * np.array([3.0, 4, 0])
        assert mpjve(gt + drift, gt) == pytest.approx(5)
        assert accel_error(gt + drift, gt) == pytest.approx(0, abs=1e-9)

    @pytest.mark.parametrize("metric, frames", [(mpjve, 1), (accel_error, 2)])
    def test_too_few_frames(self, metric, frames):
        gt = random_poses(frames=frames)
        with pytest.raises(InvalidHyperposeArgumentError):
            metric(gt, gt)


class Test_blc:
    def test_rigid_motion_keeps_bones(self):
        gt = random_poses(9)
        pred = gt @ ROTATION + 100.0
        assert blc(pred, gt, stub_skeleton()) == pytest.approx(0, abs=1e-9)

    def test_chain_deviation(self):
        chain = load_skeleton(CHAIN_DOCUMENT)
        gt = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0.0]])
        pred = gt * np.array([2.0, 1, 1])
        # every bone doubles from 1 to 2
        assert blc(pred, gt, chain) == pytest.approx(1)

    def test_joint_count(self):
        with pytest.raises(ShapeMismatchError):
            blc(np.zeros((4, 3)), np.zeros((4, 3)), stub_skeleton())


class Test_diagnostics:
    def test_pairwise_geodesic(self):
        points = lorentz_core.exp_origin(
            np.random.default_rng(0).normal(size=(6, 3))
        )
        distances = pairwise_geodesic(points)
        np.testing.assert_allclose(distances, distances.T, atol=1e-10)
        np.testing.assert_allclose(np.diag(distances), 0, atol=1e-6)

    def test_geodesic_chain_has_no_distortion(self):
        chain = load_skeleton(CHAIN_DOCUMENT)
        tangents = np.zeros((4, 3))
        tangents[:, 0] = 0.5 * np.arange(4)
        points = lorentz_core.exp_origin(tangents)
        assert distortion_ratio(points, chain) == pytest.approx(1, rel=1e-6)

    def test_distortion_is_at_least_one(self):
        rng = np.random.default_rng(1)
        points = lorentz_core.exp_origin(rng.normal(size=(3, 5, 4)))
        assert distortion_ratio(points, stub_skeleton()) >= 1

    def test_distortion_shape(self):
        with pytest.raises(ShapeMismatchError):
            distortion_ratio(np.zeros((4, 3)), stub_skeleton())

    def test_separated_clusters_retrieve_perfectly(self):
        rng = np.random.default_rng(2)
        centres = np.array([[2.0, 0], [-2.0, 0]])
        tangents = np.repeat(centres, 4, axis=0) + rng.normal(0, 0.05, size=(8, 2))
        labels = np.repeat(["left", "right"], 4)
        value = map_retrieval(lorentz_core.exp_origin(tangents), labels)
        assert value == pytest.approx(100)

    def test_no_hits_is_nan(self):
        points = lorentz_core.exp_origin(np.eye(3))
        assert np.isnan(map_retrieval(points, [0, 1, 2]))

    def test_label_count(self):
        with pytest.raises(ShapeMismatchError):
            map_retrieval(lorentz_core.exp_origin(np.eye(3)), [0, 1])


class Test_report:
    def test_ground_truth_scores_zero(self):
        gt = random_poses(10, frames=6)
        row = sequence_metrics(gt, gt, stub_skeleton())
        assert list(row) == METRIC_COLUMNS
        for column in ("mpjpe", "n_mpjpe", "mpjve", "accel", "blc"):
            assert row[column] == pytest.approx(0, abs=1e-9)
        assert np.isnan(row["distortion"]) and np.isnan(row["entropy"])

    def test_short_sequence_has_nan_temporal_metrics(self):
        gt = random_poses(11, frames=1)
        row = sequence_metrics(gt + 1.0, gt, stub_skeleton())
        assert np.isnan(row["mpjve"]) and np.isnan(row["accel"])
        assert row["mpjpe"] == pytest.approx(np.sqrt(3))

    def test_diagnostics_are_filled_when_given(self):
        gt = random_poses(12, frames=3)
        embeddings = lorentz_core.exp_origin(
            np.random.default_rng(13).normal(size=(3, 5, 4))
        )
        weights = np.full((3, 5, 5), 0.2)
        row = sequence_metrics(gt, gt, stub_skeleton(), embeddings, weights)
        assert row["distortion"] >= 1
        assert 0 <= row["map"] <= 100
        assert row["entropy"] == pytest.approx(np.log(5))

    def test_average_row(self):
        rows = [
            {column: float(i) for column in METRIC_COLUMNS} for i in range(1, 4)
        ]
        report = build_report(["seq000", "seq001", "seq002"], rows)
        assert list(report.table.index) == ["seq000", "seq001", "seq002", AVG_ROW_LABEL]
        assert report.average["mpjpe"] == pytest.approx(2)
        assert len(report.sequences) == 3

    def test_row_count_must_match(self):
        with pytest.raises(InvalidHyperposeArgumentError):
            build_report(["a", "b"], [{"mpjpe": 1.0}])

    def test_csv_round_trip(self, tmp_path):
        rows = [{"mpjpe": 10.5, "p_mpjpe": 7.25}, {"mpjpe": 11.0, "p_mpjpe": 8.0}]
        report = build_report(["walk", "run"], rows)
        path = str(tmp_path / "metrics.csv")
        report.to_csv(path)
        again = MetricReport.read_csv(path)
        assert list(again.table.index) == ["walk", "run", AVG_ROW_LABEL]
        assert list(again.table.columns) == METRIC_COLUMNS
        assert again.average["mpjpe"] == pytest.approx(10.75)
        assert np.isnan(again.average["blc"])

    def test_yaml_carries_the_definition(self, tmp_path):
        import yaml

        report = build_report(["walk"], [{"mpjpe": 1.0}])
        path = tmp_path / "metrics.yaml"
        report.to_yaml(str(path))
        document = yaml.safe_load(path.read_text())
        assert document["definition_id"] == report.definition_id
        assert document["sequences"]["walk"]["mpjpe"] == 1.0
