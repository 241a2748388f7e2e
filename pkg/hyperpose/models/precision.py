from __future__ import annotations

import dataclasses
from typing import Literal

import numpy as np

from hyperpose.models.constants import DRIFT_TOL_FP32, DRIFT_TOL_FP64
from hyperpose.models.registry import Registry


@dataclasses.dataclass
class Precision:
    """Working floating point precision of a run.

    Lorentz primitives never run below fp32, so there is no half precision
    entry here.
    """

    name: Literal["fp32", "fp64"]
    dtype: type
    drift_tol: float

    def cast(self, values) -> np.ndarray:
        return np.asarray(values, dtype=self.dtype)


class PrecisionRegistry(Registry[Precision]):
    _item_class = Precision

    FP32 = Precision("fp32", np.float32, DRIFT_TOL_FP32)
    FP64 = Precision("fp64", np.float64, DRIFT_TOL_FP64)

    @staticmethod
    def get_item_aliases(item: Precision) -> list[str]:
        return [item.name.upper(), np.dtype(item.dtype).name.upper()]

    @classmethod
    def of(cls, array: np.ndarray) -> Precision:
        if np.asarray(array).dtype == np.float64:
            return cls.FP64
        return cls.FP32
