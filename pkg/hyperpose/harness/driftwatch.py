"""Manifold drift of the Q/K lifts of a trained network, per sequence."""
from __future__ import annotations

import numpy as np
import pandas as pd
import xarray as xr

from hyperpose.geometry.lorentz_core import checked_mode, stability_scope
from hyperpose.harness.evaluation import load_network
from hyperpose.harness.training import drift_log_rows
from hyperpose.hyperpose_logger import HyperposeLogger, VerbosityRegistry
from hyperpose.models.constants import DRIFT_LOG_COLUMNS
from hyperpose.models.precision import PrecisionRegistry
from hyperpose.models.stability_config import StabilityConfig

log: HyperposeLogger = HyperposeLogger.get_instance(VerbosityRegistry.LOW)


def drift_series(network, dataset: xr.Dataset) -> pd.DataFrame:
    """Drift rows of every lift site, the step being the sequence index."""
    inputs = dataset["inputs"].values
    rows = []
    network.watch_drift = True
    with checked_mode(False):
        for step, sequence in enumerate(inputs):
            network(sequence)
            rows.extend(drift_log_rows(step, network.drift_records))
    return pd.DataFrame(rows, columns=DRIFT_LOG_COLUMNS)


def driftwatch(
    checkpoint_path: str,
    dataset: xr.Dataset,
    precision: str | None = None,
    stability: dict | None = None,
) -> pd.DataFrame:
    """
    Drift time series of a checkpoint on a dataset.

    Parameters
    ----------
    precision: str | None
        ``fp32`` or ``fp64``; defaults to the precision the checkpoint was
        trained in. Exceeding the tolerance of that precision only logs a
        warning.
    stability: dict | None
        StabilityConfig overrides, the ``stability`` section of a config file.
        A given ``drift_tol`` replaces the one of the precision; given
        ``r_q`` and ``r_safety`` replace the clip radii of the checkpoint
        while the drift is measured, and ``eps`` the guard of the primitives.
    """
    network = load_network(checkpoint_path, dataset, precision)
    overrides = {"r_q": network.config.r_q, "r_safety": network.config.r_safety}
    overrides.update(stability or {})
    stability = StabilityConfig.for_precision(
        PrecisionRegistry.of(np.empty(0, dtype=network.params.dtype)), **overrides
    )
    with stability_scope(stability):
        table = drift_series(network, dataset)
    worst = float(table["drift"].max()) if len(table) else 0.0
    if worst > stability.drift_tol:
        log.warning(
            f"Maximal manifold drift {worst:.3e} exceeds the tolerance"
            f" {stability.drift_tol:.1e}."
        )
    else:
        log.info(f"Maximal manifold drift {worst:.3e}.")
    return table
