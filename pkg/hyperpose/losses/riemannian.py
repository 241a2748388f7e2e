"""
Riemannian loss suite.

Predicted and ground-truth joints are in millimetres. The geodesic terms lift
them onto the 3-dimensional hyperboloid after scaling by ``lift_scale``
(mm -> m by default) and compare hyperbolic distances.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from hyperpose.autodiff import manifold_ops, ops
from hyperpose.autodiff.tensor import Tensor, as_tensor
from hyperpose.hyperpose_exceptions import (
    InvalidHyperposeArgumentError,
    ShapeMismatchError,
)
from hyperpose.kinematics.skeleton import Skeleton
from hyperpose.models.constants import (
    CURRICULUM_FULL,
    CURRICULUM_ZERO_END,
    LIFT_SCALE,
    LOSS_TERMS,
)
from hyperpose.models.train_config import TrainConfig
from hyperpose.network.parameters import ParameterStore


def _check_pair(pred, gt) -> tuple[Tensor, Tensor]:
    pred = as_tensor(pred)
    gt = as_tensor(gt, like=pred)
    if pred.shape != gt.shape:
        raise ShapeMismatchError(
            f"Prediction {pred.shape} and ground truth {gt.shape} differ."
        )
    if pred.ndim < 2 or pred.shape[-1] != 3:
        raise ShapeMismatchError(f"Expected [..., J, 3] joints, got {pred.shape}.")
    return pred, gt


def loss_mpjpe(pred, gt) -> Tensor:
    """Mean Euclidean per-joint error, in the unit of the inputs."""
    pred, gt = _check_pair(pred, gt)
    return ops.mean(ops.vector_norm(ops.sub(pred, gt), axis=-1))


def lift_to_hyperboloid(y, scale: float = LIFT_SCALE) -> Tensor:
    """pi(scale * y) = (sqrt(1 + |scale * y|^2), scale * y)."""
    return manifold_ops.project_hyperboloid(ops.scale(as_tensor(y), scale))


def consecutive_geodesic_steps(y, scale: float = LIFT_SCALE) -> Tensor:
    """d_L between the lifted joints of frames t and t+1, [..., T-1, J]."""
    lifted = lift_to_hyperboloid(y, scale)
    return manifold_ops.geodesic_distance(
        lifted[..., 1:, :, :], lifted[..., :-1, :, :]
    )


def loss_velocity(pred, gt, scale: float = LIFT_SCALE) -> Tensor:
    """
    Geodesic velocity consistency.

    Mean |d_L(p_t, p_t+1) - d_L(g_t, g_t+1)| over every joint and pair of
    consecutive frames; 0 iff every per-joint geodesic displacement matches.
    """
    pred, gt = _check_pair(pred, gt)
    if pred.ndim < 3 or pred.shape[-3] < 2:
        raise ShapeMismatchError(
            f"The velocity loss needs at least 2 frames, got {pred.shape}."
        )
    steps = ops.sub(
        consecutive_geodesic_steps(pred, scale), consecutive_geodesic_steps(gt, scale)
    )
    return ops.mean(ops.absolute(steps))


def loss_bone(pred, gt, skeleton: Skeleton, scale: float = LIFT_SCALE) -> Tensor:
    """Mean |d_L| deviation of the lifted bone lengths over frames and bones."""
    pred, gt = _check_pair(pred, gt)
    if pred.shape[-2] != skeleton.num_joints:
        raise ShapeMismatchError(
            f"The skeleton has {skeleton.num_joints} joints, the poses"
            f" {pred.shape[-2]}."
        )
    child, parent = skeleton.bone_index

    def bone_lengths(y: Tensor) -> Tensor:
        lifted = lift_to_hyperboloid(y, scale)
        return manifold_ops.geodesic_distance(
            ops.take(lifted, child, axis=-2), ops.take(lifted, parent, axis=-2)
        )

    return ops.mean(ops.absolute(ops.sub(bone_lengths(pred), bone_lengths(gt))))


def curriculum_weight(
    epoch: float,
    zero_end: int = CURRICULUM_ZERO_END,
    full: int = CURRICULUM_FULL,
) -> float:
    """omega(e) = clamp((e - zero_end) / (full - zero_end), 0, 1)."""
    if epoch < 0:
        raise InvalidHyperposeArgumentError(f"epoch must be >= 0, got {epoch}.")
    return float(np.clip((epoch - zero_end) / (full - zero_end), 0.0, 1.0))


class UncertaintyWeights:
    """
    Learned log sigma^2 of every loss term, initialised at 0.

    With ``learn=False`` the scalars do not require gradients and stay at 0,
    i.e. every sigma^2 is frozen at 1.
    """

    def __init__(self, dtype=np.float64, learn: bool = True):
        self.params = ParameterStore(dtype)
        self.log_sigma_sq = {}
        for term in LOSS_TERMS:
            tensor = self.params.add(f"loss.log_sigma_sq_{term}", np.zeros(()))
            tensor.requires_grad = learn
            self.log_sigma_sq[term] = tensor

    def sigma_sq(self) -> dict[str, float]:
        return {term: float(np.exp(t.data)) for term, t in self.log_sigma_sq.items()}


def total_loss(
    losses: dict[str, Tensor],
    uncertainty: UncertaintyWeights,
    omega: float,
) -> Tensor:
    """
    L_mpjpe / 2 sigma_m^2 + omega * sum_k L_k / 2 sigma_k^2 + 1/2 sum log sigma_k^2.

    Only the terms present in `losses` contribute, their log sigma^2 included.
    """
    if "mpjpe" not in losses:
        raise InvalidHyperposeArgumentError("The MPJPE term is mandatory.")
    unknown = set(losses) - set(LOSS_TERMS)
    if unknown:
        raise InvalidHyperposeArgumentError(
            f"Unknown loss terms {sorted(unknown)}, use {LOSS_TERMS}."
        )
    total = None
    for term in LOSS_TERMS:
        if term not in losses:
            continue
        log_sigma_sq = uncertainty.log_sigma_sq[term]
        weighted = ops.scale(ops.div(losses[term], ops.exp(log_sigma_sq)), 0.5)
        if term != "mpjpe":
            weighted = ops.scale(weighted, omega)
        contribution = ops.add(weighted, ops.scale(log_sigma_sq, 0.5))
        total = contribution if total is None else ops.add(total, contribution)
    return total


@dataclasses.dataclass
class LossBreakdown:
    total: Tensor
    terms: dict[str, float]
    omega: float
    sigma_sq: dict[str, float]

    def to_row(self) -> dict[str, float]:
        row = {"loss_total": self.total.item(), "omega": self.omega}
        for term in LOSS_TERMS:
            row[f"loss_{term}"] = self.terms.get(term, float("nan"))
            row[f"sigma_sq_{term}"] = self.sigma_sq[term]
        return row


class PoseLoss:
    """The training objective of one run, switches taken from its TrainConfig."""

    def __init__(self, config: TrainConfig, skeleton: Skeleton, dtype=np.float64):
        self.config = config
        self.skeleton = skeleton
        self.uncertainty = UncertaintyWeights(dtype, learn=config.learn_weights)

    @property
    def params(self) -> ParameterStore:
        return self.uncertainty.params

    def omega(self, epoch: float) -> float:
        if not self.config.use_curriculum:
            return 1.0
        return curriculum_weight(
            epoch, self.config.curriculum_zero_end, self.config.curriculum_full
        )

    def __call__(self, pred: Tensor, gt, epoch: float) -> LossBreakdown:
        scale = self.config.lift_scale
        losses = {"mpjpe": loss_mpjpe(pred, gt)}
        if self.config.use_velocity_loss and pred.shape[-3] >= 2:
            losses["vel"] = loss_velocity(pred, gt, scale)
        if self.config.use_bone_loss:
            losses["bone"] = loss_bone(pred, gt, self.skeleton, scale)
        omega = self.omega(epoch)
        return LossBreakdown(
            total=total_loss(losses, self.uncertainty, omega),
            terms={term: value.item() for term, value in losses.items()},
            omega=omega,
            sigma_sq=self.uncertainty.sigma_sq(),
        )
