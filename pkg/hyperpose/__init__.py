from hyperpose.main import (
    bench_attention,
    count_parameters,
    driftwatch,
    evaluate,
    gradcheck,
    synth,
    train,
)
from hyperpose.models.constants import HYPERPOSE_VERSION

__all__ = [
    # -- Data
    "synth",
    # -- Training and evaluation
    "train",
    "evaluate",
    # -- Diagnostics
    "gradcheck",
    "driftwatch",
    "bench_attention",
    "count_parameters",
]

__version__ = HYPERPOSE_VERSION
