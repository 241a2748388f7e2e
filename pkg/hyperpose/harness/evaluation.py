"""
Checkpoint evaluation.

Sequences are evaluated as independent dask tasks, each on its own copy of the
network since a forward pass keeps per-call state (attention weights, hidden
state, drift records). Rows are gathered in dataset order.
"""
from __future__ import annotations

import dask
import numpy as np
import xarray as xr

from hyperpose.geometry.lorentz_core import checked_mode
from hyperpose.harness.dataset_io import dataset_skeleton
from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.kinematics.skeleton import Skeleton, load_skeleton
from hyperpose.metrics.report import build_report, sequence_metrics
from hyperpose.models.metric_report import MetricReport
from hyperpose.models.model_config import ModelConfig
from hyperpose.models.precision import PrecisionRegistry
from hyperpose.network.network import HyperPoseNetwork
from hyperpose.network.parameters import load_checkpoint

DEFAULT_DASK_CONF = {"scheduler": "threads"}
DEFAULT_PRESET = "h36m_17"


def load_network(
    checkpoint_path: str,
    dataset: xr.Dataset | None = None,
    precision: str | None = None,
) -> HyperPoseNetwork:
    """
    Rebuild the network of a checkpoint in eval mode.

    The skeleton comes from `dataset` when given, the 17-joint preset
    otherwise. `precision` overrides the one the checkpoint was trained in.
    """
    state, metadata = load_checkpoint(checkpoint_path)
    if "model" not in metadata:
        raise InvalidHyperposeArgumentError(
            f"The sidecar of {checkpoint_path} has no model configuration."
        )
    config = ModelConfig.from_dict(metadata["model"])
    if dataset is None:
        skeleton = load_skeleton(DEFAULT_PRESET, config.hop_convention)
    else:
        skeleton = dataset_skeleton(dataset, config.hop_convention)
    check_compatibility(config, skeleton)
    precision = PrecisionRegistry.lookup(precision or metadata.get("precision", "fp32"))
    network = HyperPoseNetwork(config, skeleton, precision.dtype)
    network.params.load_state(state)
    return network.eval()


def check_compatibility(config: ModelConfig, skeleton: Skeleton) -> None:
    if skeleton.num_joints != config.joints:
        raise InvalidHyperposeArgumentError(
            f"The checkpoint was trained on {config.joints} joints, the dataset"
            f" has {skeleton.num_joints}."
        )


def _evaluate_sequence(
    network: HyperPoseNetwork, inputs: np.ndarray, targets: np.ndarray
) -> dict[str, float]:
    with checked_mode(False):
        pred = network(inputs).data
    weights = network.attention_weights()
    spatial = [w for name, w in weights.items() if name.startswith("spatial")]
    embeddings = network.joint_embeddings()
    return sequence_metrics(
        pred,
        targets,
        network.skeleton,
        embeddings=None if embeddings is None else embeddings[0],
        attention=spatial[-1] if spatial else None,
    )


def evaluate_network(
    network: HyperPoseNetwork, dataset: xr.Dataset, parallel: bool = True
) -> MetricReport:
    """Per-sequence metrics of `network` on `dataset`, plus the AVG row."""
    inputs = dataset["inputs"].values
    targets = dataset["targets"].values
    if inputs.shape[2] != network.config.joints:
        raise InvalidHyperposeArgumentError(
            f"The dataset has {inputs.shape[2]} joints, the network"
            f" {network.config.joints}."
        )
    names = [str(name) for name in dataset["sequence"].values]
    state = network.params.state()

    def replica() -> HyperPoseNetwork:
        copy = HyperPoseNetwork(network.config, network.skeleton, network.params.dtype)
        copy.params.load_state(state)
        return copy.eval()

    if not parallel:
        rows = [
            _evaluate_sequence(network.eval(), x, y) for x, y in zip(inputs, targets)
        ]
        return build_report(names, rows)
    tasks = [
        dask.delayed(_evaluate_sequence)(dask.delayed(replica)(), x, y)
        for x, y in zip(inputs, targets)
    ]
    with dask.config.set(DEFAULT_DASK_CONF):
        rows = list(dask.compute(*tasks))
    return build_report(names, rows)


def evaluate_checkpoint(
    checkpoint_path: str, dataset: xr.Dataset, parallel: bool = True
) -> MetricReport:
    """
    Evaluate a checkpoint on a dataset.

    Raises
    ------
    InvalidHyperposeArgumentError
        When the checkpoint config does not fit the dataset skeleton, or the
        stored tensors do not fit the config.
    """
    network = load_network(checkpoint_path, dataset)
    return evaluate_network(network, dataset, parallel)


def evaluate_arrays(pred, gt, skeleton: Skeleton, names: list[str] | None = None):
    """Report of ready-made predictions [N, T, J, 3] against ground truth."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 4:
        raise InvalidHyperposeArgumentError(
            f"Expected matching [N, T, J, 3] arrays, got {pred.shape} and {gt.shape}."
        )
    names = names or [f"seq{i:03d}" for i in range(len(pred))]
    rows = [sequence_metrics(p, g, skeleton) for p, g in zip(pred, gt)]
    return build_report(names, rows)
