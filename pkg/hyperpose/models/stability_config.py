from __future__ import annotations

import dataclasses

from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.models.constants import DRIFT_TOL_FP64, EPS, R_Q, R_SAFETY
from hyperpose.utils import build_config


@dataclasses.dataclass(frozen=True)
class StabilityConfig:
    """
    Numerical guards of the Lorentz primitives.

    Takes effect inside :func:`hyperpose.geometry.lorentz_core.stability_scope`.

    Attributes
    ----------
    eps: float
        Clamp used by arccosh and guarded divisions.
    r_q: float
        Norm bound applied to query/key tangents before they are lifted.
    r_safety: float
        Global bound applied to the hidden tangent state between blocks.
    drift_tol: float
        Tolerance on |<x,x>_L + 1| accepted by checked primitives.
    """

    eps: float = EPS
    r_q: float = R_Q
    r_safety: float = R_SAFETY
    drift_tol: float = DRIFT_TOL_FP64

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise InvalidHyperposeArgumentError(
                f"eps must be in (0, 1), got {self.eps}."
            )
        if not 0 < self.r_q <= self.r_safety:
            raise InvalidHyperposeArgumentError(
                f"Expected 0 < r_q <= r_safety, got r_q={self.r_q},"
                f" r_safety={self.r_safety}."
            )
        if self.drift_tol <= 0:
            raise InvalidHyperposeArgumentError("drift_tol must be positive.")

    @classmethod
    def for_precision(cls, precision, **overrides) -> StabilityConfig:
        return build_config(cls, {"drift_tol": precision.drift_tol, **overrides})
