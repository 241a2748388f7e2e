from __future__ import annotations

from hyperpose.network.network import HyperPoseNetwork  # noqa
from hyperpose.network.parameters import (  # noqa
    analytic_parameter_count,
    count_parameters,
    load_checkpoint,
    save_checkpoint,
)
