from __future__ import annotations

from hyperpose.losses.riemannian import (  # noqa
    PoseLoss,
    curriculum_weight,
    lift_to_hyperboloid,
    loss_bone,
    loss_mpjpe,
    loss_velocity,
    total_loss,
)
