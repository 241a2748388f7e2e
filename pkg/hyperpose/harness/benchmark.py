"""
Banded against dense temporal attention.

Multiply-adds are counted by the instrumented attention kernels: 2 * d_h per
(query, key) pair, one for the score product and one for the aggregation.
Softmax and projections are not counted.
"""
from __future__ import annotations

import time

import numpy as np
import pandas as pd
import psutil

from hyperpose.autodiff.tensor import Tensor
from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.hyperpose_logger import HyperposeLogger, VerbosityRegistry
from hyperpose.models.constants import BENCH_COLUMNS, DEFAULT_TEMPORAL_WINDOWS
from hyperpose.network.attention import (
    attention_macs,
    banded_attention,
    dense_attention,
)

log: HyperposeLogger = HyperposeLogger.get_instance(VerbosityRegistry.LOW)


def _random_heads(rng, heads: int, frames: int, d_head: int) -> list[Tensor]:
    return [Tensor(rng.standard_normal((heads, frames, d_head))) for _ in range(3)]


def _timed(kind: str, run) -> tuple[int, float]:
    attention_macs.reset()
    start = time.perf_counter()
    run()
    return attention_macs.macs[kind], time.perf_counter() - start


def bench_attention(
    frames: list[int],
    windows: list[int],
    heads: int = 8,
    d_head: int = 64,
    seed: int = 0,
) -> pd.DataFrame:
    """One row per (T, W): exact multiply-adds and wall time of both kernels."""
    if not frames or not windows:
        raise InvalidHyperposeArgumentError("Expected at least one T and one W.")
    if min(frames) < 1 or min(windows) < 0:
        raise InvalidHyperposeArgumentError(
            f"Invalid benchmark grid T={list(frames)}, W={list(windows)}."
        )
    rng = np.random.default_rng(seed)
    rows = []
    for t in frames:
        q, k, v = _random_heads(rng, heads, t, d_head)
        dense_macs, dense_seconds = _timed(
            "dense", lambda: dense_attention(q, k, v, 1.0)
        )
        for w in windows:
            banded_macs, banded_seconds = _timed(
                "banded", lambda: banded_attention(q, k, v, w, 1.0)
            )
            rows.append(
                {
                    "T": t,
                    "W": w,
                    "banded_macs": banded_macs,
                    "dense_macs": dense_macs,
                    "ratio": dense_macs / banded_macs,
                    "banded_seconds": banded_seconds,
                    "dense_seconds": dense_seconds,
                    "rss_mb": psutil.Process().memory_info().rss / 2**20,
                }
            )
    table = pd.DataFrame(rows, columns=BENCH_COLUMNS)
    log.debug(table.to_string(index=False))
    return table


def stack_ratio(
    frames: int,
    windows: tuple[int, ...] = DEFAULT_TEMPORAL_WINDOWS,
    d_head: int = 1,
) -> float:
    """
    Dense over banded multiply-adds of a whole stack of temporal blocks.

    Measured, not derived: every block of the stack is run once with each
    kernel. The default windows at T=243 give 177147 / 18825, about 9.4.
    """
    rng = np.random.default_rng(0)
    q, k, v = _random_heads(rng, 1, frames, d_head)
    banded = dense = 0
    for w in windows:
        banded += _timed("banded", lambda: banded_attention(q, k, v, w, 1.0))[0]
        dense += _timed("dense", lambda: dense_attention(q, k, v, 1.0))[0]
    return dense / banded
