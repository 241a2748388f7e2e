from __future__ import annotations

from hyperpose.metrics.diagnostics import distortion_ratio, map_retrieval  # noqa
from hyperpose.metrics.pose_metrics import (  # noqa
    accel_error,
    blc,
    mpjpe,
    mpjve,
    n_mpjpe,
    p_mpjpe,
    procrustes_align,
)
from hyperpose.metrics.report import build_report, sequence_metrics  # noqa
