"""
Desk-scale training loop.

Every epoch shuffles the training sequences into batches, augments them and
takes one AdamW step per batch under the warmup + cosine schedule. One CSV row
is logged per epoch and the parameters with the best validation MPJPE are
checkpointed.
"""
from __future__ import annotations

import dataclasses
import math
import os
import time
from typing import Callable

import fsspec
import numpy as np
import pandas as pd
import xarray as xr

from hyperpose.autodiff.tensor import Tape
from hyperpose.geometry.lorentz_core import checked_mode, stability_scope
from hyperpose.harness.augmentation import augment_batch
from hyperpose.harness.dataset_io import dataset_skeleton, split_dataset
from hyperpose.harness.optimizer import AdamW, clip_gradients
from hyperpose.harness.schedule import learning_rate
from hyperpose.hyperpose_exceptions import NonFiniteError, ShapeMismatchError
from hyperpose.hyperpose_logger import HyperposeLogger, VerbosityRegistry
from hyperpose.losses.riemannian import PoseLoss, loss_mpjpe
from hyperpose.models.constants import DRIFT_LOG_COLUMNS, TRAIN_LOG_COLUMNS
from hyperpose.models.model_config import ModelConfig
from hyperpose.models.precision import PrecisionRegistry
from hyperpose.models.stability_config import StabilityConfig
from hyperpose.models.train_config import TrainConfig
from hyperpose.network.network import DriftRecord, HyperPoseNetwork
from hyperpose.network.parameters import save_checkpoint
from hyperpose.utils import log10_or_nan

CHECKPOINT_NAME = "best.hpck"
TRAIN_LOG_NAME = "train_log.csv"
DRIFT_LOG_NAME = "drift_log.csv"

log: HyperposeLogger = HyperposeLogger.get_instance(VerbosityRegistry.LOW)


@dataclasses.dataclass
class TrainingRun:
    network: HyperPoseNetwork
    loss: PoseLoss
    log: pd.DataFrame
    best_val_mpjpe: float
    best_epoch: int
    checkpoint_path: str | None
    log_path: str | None
    drift: pd.DataFrame | None = None


def drift_log_rows(step: int, records: list[DriftRecord]) -> list[dict]:
    return [
        {
            "step": step,
            "block": r.block,
            "site": r.site,
            "drift": r.drift,
            "log10_drift": log10_or_nan(r.drift),
        }
        for r in records
    ]


def write_csv(table: pd.DataFrame, path: str) -> None:
    with fsspec.open(path, "w", newline="") as f:
        table.to_csv(f, index=False, float_format="%.10g", lineterminator="\n")


def predict(
    network: HyperPoseNetwork, inputs: np.ndarray, batch_size: int
) -> np.ndarray:
    """Eval-mode predictions [N, T, J, 3] of a stack of sequences."""
    network.eval()
    chunks = [
        network(inputs[start : start + batch_size]).data
        for start in range(0, len(inputs), batch_size)
    ]
    return np.concatenate(chunks)


def train_model(
    dataset: xr.Dataset,
    model_config: ModelConfig,
    train_config: TrainConfig,
    output_dir: str | None = None,
    callback: Callable[[float], None] | None = None,
    watch_drift: bool = True,
) -> TrainingRun:
    """
    Train a network on `dataset`.

    With `watch_drift`, the manifold drift of every Q/K lift of every step is
    kept in ``TrainingRun.drift`` (and written next to the training log). It
    is measured on detached values and never changes the parameters.
    The primitives run under the StabilityConfig of the training precision,
    with the clip radii of `model_config`.

    Raises
    ------
    NonFiniteError
        With the offending step and tensor name, as soon as the loss or a
        gradient is not finite.
    """
    skeleton = dataset_skeleton(dataset, model_config.hop_convention)
    if skeleton.num_joints != model_config.joints:
        raise ShapeMismatchError(
            f"The dataset has {skeleton.num_joints} joints, the model expects"
            f" {model_config.joints}."
        )
    dtype = train_config.dtype
    stability = StabilityConfig.for_precision(
        PrecisionRegistry.lookup(train_config.precision),
        r_q=model_config.r_q,
        r_safety=model_config.r_safety,
    )
    network = HyperPoseNetwork(model_config, skeleton, dtype, seed=train_config.seed)
    network.watch_drift = watch_drift
    loss = PoseLoss(train_config, skeleton, dtype)
    optimizer = AdamW(
        [network.params, loss.params], train_config.lr, train_config.weight_decay
    )
    rng = np.random.default_rng(train_config.seed + 1)
    train_ds, val_ds = split_dataset(
        dataset, train_config.validation_fraction, train_config.seed
    )
    inputs = train_ds["inputs"].values.astype(dtype)
    targets = train_ds["targets"].values.astype(dtype)
    val_inputs = val_ds["inputs"].values.astype(dtype)
    val_targets = val_ds["targets"].values
    batches = math.ceil(len(inputs) / train_config.batch_size)

    checkpoint_path = log_path = None
    if output_dir is not None:
        fs, root = fsspec.core.url_to_fs(output_dir)
        fs.makedirs(root, exist_ok=True)
        checkpoint_path = os.path.join(output_dir, CHECKPOINT_NAME)
        log_path = os.path.join(output_dir, TRAIN_LOG_NAME)

    rows, drift_rows = [], []
    best_val, best_epoch = math.inf, -1
    step = 0
    start = time.perf_counter()
    with checked_mode(False), stability_scope(stability):
        for epoch in range(train_config.epochs):
            network.train()
            order = rng.permutation(len(inputs))
            epoch_rows = []
            for b in range(batches):
                first = b * train_config.batch_size
                index = np.sort(order[first : first + train_config.batch_size])
                lr = learning_rate(
                    epoch + b / batches,
                    train_config.lr,
                    train_config.epochs,
                    train_config.warmup_epochs,
                    train_config.lr_floor,
                )
                batch_inputs, batch_targets = augment_batch(
                    inputs[index],
                    targets[index],
                    skeleton.mirror,
                    rng,
                    hflip=train_config.hflip,
                    dropout_p=(
                        train_config.confidence_dropout_p
                        if train_config.confidence_dropout
                        else 0.0
                    ),
                )
                optimizer.zero_grad()
                try:
                    with Tape() as tape:
                        pred = network(batch_inputs, rng)
                        breakdown = loss(pred, batch_targets, epoch)
                    tape.backward(breakdown.total)
                    grad_norm = clip_gradients(
                        optimizer.stores, train_config.grad_clip
                    )
                except NonFiniteError as e:
                    raise NonFiniteError(
                        f"Training diverged at step {step}: {e.msg}",
                        tensor_name=e.tensor_name,
                        step=step,
                    ) from e
                optimizer.step(lr)
                row = breakdown.to_row()
                row.update(lr=lr, grad_norm=grad_norm, drift=network.max_drift())
                epoch_rows.append(row)
                drift_rows.extend(drift_log_rows(step, network.drift_records))
                step += 1

            row = pd.DataFrame(epoch_rows).mean().to_dict()
            row["drift"] = max(r["drift"] for r in epoch_rows)
            val_pred = predict(network, val_inputs, train_config.batch_size)
            val_mpjpe = loss_mpjpe(val_pred, val_targets).item()
            row.update(
                epoch=epoch,
                step=step,
                log10_drift=log10_or_nan(row["drift"]),
                val_mpjpe=val_mpjpe,
                wall_time=time.perf_counter() - start,
            )
            rows.append(row)
            log.epoch_summary(row)
            if val_mpjpe < best_val:
                best_val, best_epoch = val_mpjpe, epoch
                if checkpoint_path is not None:
                    save_checkpoint(
                        checkpoint_path,
                        network.params,
                        {
                            "model": model_config.to_dict(),
                            "precision": train_config.precision,
                            "epoch": epoch,
                            "best_val_mpjpe": float(val_mpjpe),
                            "train": train_config.to_dict(),
                        },
                    )
            if callback is not None:
                callback(100.0 * (epoch + 1) / train_config.epochs)

    table = pd.DataFrame(rows, columns=TRAIN_LOG_COLUMNS)
    drift = pd.DataFrame(drift_rows, columns=DRIFT_LOG_COLUMNS) if watch_drift else None
    if log_path is not None:
        write_csv(table, log_path)
        if drift is not None:
            write_csv(drift, os.path.join(output_dir, DRIFT_LOG_NAME))
    network.eval()
    return TrainingRun(
        network, loss, table, best_val, best_epoch, checkpoint_path, log_path, drift
    )
