"""
Main entry point of hyperpose.

One function per command line subcommand: :func:`synth`, :func:`train`,
:func:`evaluate`, :func:`gradcheck`, :func:`driftwatch`,
:func:`bench_attention` and :func:`count_parameters`.
"""
from __future__ import annotations

import time
from typing import Callable, Sequence

import pandas as pd
import xarray as xr

from hyperpose.autodiff.gradcheck import GradcheckReport
from hyperpose.harness import benchmark, dataset_io, driftwatch as drift_module
from hyperpose.harness import evaluation, gradient_suite, synthetic, training
from hyperpose.harness.training import TrainingRun, write_csv
from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.hyperpose_logger import HyperposeLogger, Verbosity, VerbosityRegistry
from hyperpose.hyperpose_types import DatasetLike, PrecisionLike
from hyperpose.kinematics.skeleton import Skeleton, load_skeleton
from hyperpose.models.ablation import Ablation, AblationRegistry
from hyperpose.models.constants import DEFAULT_TEMPORAL_WINDOWS
from hyperpose.models.metric_report import MetricReport
from hyperpose.models.model_config import ModelConfig
from hyperpose.models.synthetic_spec import SyntheticSpec
from hyperpose.models.train_config import TrainConfig
from hyperpose.network.network import HyperPoseNetwork
from hyperpose.network.parameters import analytic_parameter_count
from hyperpose.utils import build_config, read_config_file

log: HyperposeLogger = HyperposeLogger.get_instance(VerbosityRegistry.LOW)


def synth(
    spec: SyntheticSpec | dict | None = None,
    output_file: str | None = None,
    seed: int | None = None,
    config_file: str | None = None,
    logs_verbosity: Verbosity | str = VerbosityRegistry.LOW,
) -> xr.Dataset:
    """
    Generate a synthetic dataset.

    Parameters
    ----------
    spec: SyntheticSpec | dict | None
        The dataset description; a dict is merged over the ``synth`` section
        of `config_file`.
    output_file: str | None
        When given, the binary dataset and its manifest are written there.
    seed: int | None
        Overrides the seed of `spec`.
    """
    _setup("synth", logs_verbosity)
    if not isinstance(spec, SyntheticSpec):
        values = read_config_file(config_file)["synth"]
        values.update(spec or {})
        spec = build_config(SyntheticSpec, values, seed=seed)
    elif seed is not None:
        spec = SyntheticSpec.from_dict({**spec.to_dict(), "seed": seed})
    ds = synthetic.synthesize(spec)
    if output_file is not None:
        dataset_io.write_dataset(ds, output_file)
        log.info(f"{spec.sequences} sequences written to {output_file}")
    log.ending_message("synth", time.process_time())
    return ds


def train(
    dataset: DatasetLike,
    output_dir: str | None = None,
    model_config: ModelConfig | dict | None = None,
    train_config: TrainConfig | dict | None = None,
    ablation: str | Ablation = AblationRegistry.FULL,
    seed: int | None = None,
    config_file: str | None = None,
    callback: Callable[[float], None] = log.callback,
    watch_drift: bool = True,
    logs_verbosity: Verbosity | str = VerbosityRegistry.LOW,
) -> TrainingRun:
    """
    Train a network and checkpoint its best-by-validation parameters.

    Parameters
    ----------
    dataset: str | xr.Dataset
        A dataset file written by :func:`synth` or an in-memory dataset.
    output_dir: str | None
        Receives ``best.hpck``, its sidecar and the CSV logs.
    model_config, train_config: dataclass | dict | None
        Dicts are merged over the ``model`` and ``train`` sections of
        `config_file`.
    ablation: str | Ablation
        Name of a registered ablation applied on top of both configs.
    seed: int | None
        Overrides the training seed.
    """
    _setup("train", logs_verbosity)
    sections = read_config_file(config_file)
    model_config = _resolve(ModelConfig, model_config, sections["model"])
    train_config = _resolve(TrainConfig, train_config, sections["train"], seed=seed)
    ablation = AblationRegistry.lookup(ablation)
    model_config, train_config = ablation.apply(model_config, train_config)
    log.info(f"Ablation '{ablation.name}': {ablation.description}")
    run = training.train_model(
        _read(dataset),
        model_config,
        train_config,
        output_dir,
        callback=callback,
        watch_drift=watch_drift,
    )
    log.info(
        f"Best validation MPJPE {run.best_val_mpjpe:.3f} at epoch {run.best_epoch}"
    )
    log.ending_message("train", time.process_time())
    return run


def evaluate(
    checkpoint: str,
    dataset: DatasetLike,
    output_file: str | None = None,
    parallel: bool = True,
    logs_verbosity: Verbosity | str = VerbosityRegistry.LOW,
) -> MetricReport:
    """
    Per-sequence metrics of a checkpoint, plus an AVG row.

    `output_file` receives the CSV report; a ``.yaml`` suffix writes the YAML
    document instead.
    """
    _setup("eval", logs_verbosity)
    report = evaluation.evaluate_checkpoint(checkpoint, _read(dataset), parallel)
    if output_file is not None:
        if output_file.endswith((".yaml", ".yml")):
            report.to_yaml(output_file)
        else:
            report.to_csv(output_file)
    log.info(f"AVG MPJPE {report.average['mpjpe']:.3f}")
    log.ending_message("eval", time.process_time())
    return report


def gradcheck(
    h: float = 1e-6,
    tol: float = 1e-3,
    max_entries: int | None = 16,
    seed: int = 0,
    logs_verbosity: Verbosity | str = VerbosityRegistry.LOW,
) -> GradcheckReport:
    """
    Finite-difference check of the toy network (d=16, H=2, J=5, T=4) in fp64.

    `max_entries` entries of each parameter tensor are sampled with `seed`;
    None checks them all.
    """
    _setup("gradcheck", logs_verbosity)
    report = gradient_suite.check_model_gradients(
        h=h, tol=tol, max_entries=max_entries, seed=seed
    )
    worst = report.worst()
    if report.passed:
        log.info(f"gradcheck passed, max relative error {report.max_rel_error:.2e}")
    elif report.failure is not None:
        log.warning(f"gradcheck aborted on a non-finite value in {report.failure}")
    else:
        log.warning(
            f"gradcheck failed on {worst.name}{list(worst.worst_index or [])},"
            f" relative error {worst.max_rel_error:.2e}"
        )
    log.ending_message("gradcheck", time.process_time())
    return report


def driftwatch(
    checkpoint: str,
    dataset: DatasetLike,
    precision: PrecisionLike | None = None,
    output_file: str | None = None,
    config_file: str | None = None,
    logs_verbosity: Verbosity | str = VerbosityRegistry.LOW,
) -> pd.DataFrame:
    """
    Manifold drift at every HKPSA lift site, one step per sequence.

    The ``stability`` section of `config_file` overrides the drift tolerance
    and the norm bounds used for the final check.
    """
    _setup("drift", logs_verbosity)
    stability = read_config_file(config_file)["stability"]
    table = drift_module.driftwatch(
        checkpoint, _read(dataset), precision, stability
    )
    if output_file is not None:
        write_csv(table, output_file)
    log.ending_message("drift", time.process_time())
    return table


def bench_attention(
    frames: Sequence[int] = (27, 81, 243),
    windows: Sequence[int] = DEFAULT_TEMPORAL_WINDOWS,
    heads: int = 8,
    d_head: int = 64,
    output_file: str | None = None,
    logs_verbosity: Verbosity | str = VerbosityRegistry.LOW,
) -> pd.DataFrame:
    """Multiply-add counts and timings of banded vs dense temporal attention."""
    _setup("bench", logs_verbosity)
    table = benchmark.bench_attention(list(frames), list(windows), heads, d_head)
    if output_file is not None:
        write_csv(table, output_file)
    for t in frames:
        log.info(
            f"T={t}: dense/banded multiply-adds over the block stack"
            f" {benchmark.stack_ratio(t, tuple(windows)):.2f}"
        )
    log.ending_message("bench", time.process_time())
    return table


def count_parameters(
    model_config: ModelConfig | dict | None = None,
    config_file: str | None = None,
    reference: bool = False,
    logs_verbosity: Verbosity | str = VerbosityRegistry.LOW,
) -> dict[str, int]:
    """
    Trainable scalars of a configuration, counted on an instantiated network
    and from the closed form.

    ``reference=True`` counts the full-size configuration instead.
    """
    _setup("params", logs_verbosity)
    if reference:
        config = ModelConfig.reference()
    else:
        file_values = read_config_file(config_file)["model"]
        config = _resolve(ModelConfig, model_config, file_values)
    skeleton = _skeleton_for(config.joints)
    counts = {
        "runtime": HyperPoseNetwork(config, skeleton).count_parameters(),
        "analytic": analytic_parameter_count(config),
    }
    log.info(f"{counts['runtime']} trainable parameters")
    log.ending_message("params", time.process_time())
    return counts


def _resolve(cls, value, file_values: dict, **overrides):
    if isinstance(value, cls):
        overrides = {k: v for k, v in overrides.items() if v is not None}
        return cls.from_dict({**value.to_dict(), **overrides}) if overrides else value
    if value is not None and not isinstance(value, dict):
        raise InvalidHyperposeArgumentError(
            f"Expected a {cls.__name__} or a dict, got {type(value).__name__}."
        )
    return build_config(cls, {**file_values, **(value or {})}, **overrides)


def _skeleton_for(joints: int) -> Skeleton:
    """The 17-joint preset, or a chain of `joints` joints."""
    if joints == 17:
        return load_skeleton("h36m_17")
    names = [f"joint{j}" for j in range(joints)]
    return load_skeleton({"joints": names, "parents": list(range(-1, joints - 1))})


def _read(dataset: DatasetLike) -> xr.Dataset:
    if isinstance(dataset, xr.Dataset):
        return dataset
    return dataset_io.read_dataset(dataset)


def _setup(command: str, logs_verbosity: Verbosity | str) -> None:
    log.set_verbosity(logs_verbosity)
    log.start_message(command)
