from __future__ import annotations

import numpy as np

from hyperpose.kinematics.skeleton import Skeleton
from hyperpose.metrics import diagnostics, pose_metrics
from hyperpose.models.metric_report import MetricReport
from hyperpose.network.attention import attention_entropy


def sequence_metrics(
    pred,
    gt,
    skeleton: Skeleton,
    embeddings: np.ndarray | None = None,
    attention: np.ndarray | None = None,
) -> dict[str, float]:
    """
    Every report column for one [T, J, 3] sequence.

    Temporal metrics needing more frames than available, and diagnostics
    whose inputs are not given, are NaN.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    frames = pred.shape[-3]
    row = {
        "mpjpe": pose_metrics.mpjpe(pred, gt),
        "p_mpjpe": pose_metrics.p_mpjpe(pred, gt),
        "n_mpjpe": pose_metrics.n_mpjpe(pred, gt),
        "mpjve": pose_metrics.mpjve(pred, gt) if frames >= 2 else np.nan,
        "accel": pose_metrics.accel_error(pred, gt) if frames >= 3 else np.nan,
        "blc": pose_metrics.blc(pred, gt, skeleton),
        "distortion": np.nan,
        "map": np.nan,
        "entropy": np.nan,
    }
    if embeddings is not None:
        row["distortion"] = diagnostics.distortion_ratio(embeddings, skeleton)
        points = embeddings.reshape(-1, embeddings.shape[-1])
        joints = skeleton.num_joints
        labels = np.tile(np.arange(joints), len(points) // joints)
        row["map"] = diagnostics.map_retrieval(points, labels)
    if attention is not None:
        row["entropy"] = attention_entropy(attention)
    return {k: float(v) for k, v in row.items()}


def build_report(names: list[str], rows: list[dict[str, float]]) -> MetricReport:
    return MetricReport.from_rows(names, rows)
