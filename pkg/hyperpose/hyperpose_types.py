from __future__ import annotations

from typing import Dict, Literal, Sequence, Union

import numpy as np
import xarray as xr

ArrayLike = Union[np.ndarray, Sequence[float], float]
# A skeleton given by preset name, file path or an already parsed document.
SkeletonLike = Union[str, Dict]
# Section name -> overrides, as found in a --config YAML file.
ConfigDocument = Dict[Literal["model", "train", "synth", "stability"], Dict]
# A dataset file path or an in-memory dataset.
DatasetLike = Union[str, xr.Dataset]
PrecisionLike = Literal["fp32", "fp64"]
