"""
Confidence-gated phase-space embedding of 2D keypoint sequences.

Inputs are [B, T, J, 3] arrays of (x, y, confidence), x and y already
normalised to [-1, 1] by the image width and height.
"""
from __future__ import annotations

import numpy as np

from hyperpose.autodiff import manifold_ops, ops
from hyperpose.autodiff.tensor import Tensor, as_tensor
from hyperpose.hyperpose_exceptions import ShapeMismatchError
from hyperpose.models.model_config import ModelConfig
from hyperpose.network.parameters import ParameterStore, uniform_init

POSITION_SITE = "embedding.position"


def confidence_gate(confidence, alpha, beta) -> Tensor:
    """1 + tanh(alpha * c + beta), in (0, 2)."""
    c = as_tensor(confidence)
    return ops.add(ops.tanh(ops.add(ops.mul(c, alpha), beta)), 1.0)


def finite_difference_velocity(xy: np.ndarray) -> np.ndarray:
    """
    Temporal derivative of [..., T, J, C] keypoints along T.

    Central differences inside, forward at t=0, backward at t=T-1, zero for a
    single frame.
    """
    frames = xy.shape[-3]
    velocity = np.zeros_like(xy)
    if frames < 2:
        return velocity
    velocity[..., 1:-1, :, :] = (xy[..., 2:, :, :] - xy[..., :-2, :, :]) / 2
    velocity[..., 0, :, :] = xy[..., 1, :, :] - xy[..., 0, :, :]
    velocity[..., -1, :, :] = xy[..., -1, :, :] - xy[..., -2, :, :]
    return velocity


def embed_positions(
    inputs: np.ndarray, w_pos: Tensor, alpha: Tensor, beta: Tensor
) -> Tensor:
    """log_o(pi(gate * W_p (x, y))) for every joint, [B, T, J, d]."""
    xy = Tensor(inputs[..., :2].astype(w_pos.dtype, copy=False))
    confidence = inputs[..., 2:3].astype(w_pos.dtype, copy=False)
    gate = confidence_gate(confidence, alpha, beta)
    phi = ops.mul(ops.matmul(xy, w_pos), gate)
    with manifold_ops.map_site(POSITION_SITE):
        return manifold_ops.log_origin(manifold_ops.project_hyperboloid(phi))


def embed_velocities(inputs: np.ndarray, w_vel: Tensor) -> Tensor:
    """W_v applied to the finite-difference velocity of (x, y), ignoring confidence."""
    velocity = finite_difference_velocity(inputs[..., :2])
    return ops.matmul(Tensor(velocity.astype(w_vel.dtype, copy=False)), w_vel)


def add_joint_identity(h: Tensor, identity: Tensor) -> Tensor:
    if h.shape[-2:] != identity.shape:
        raise ShapeMismatchError(
            f"Joint signatures of shape {identity.shape} do not match hidden"
            f" state {h.shape}."
        )
    return ops.add(h, identity)


class PhaseSpaceEmbedding:
    """Position and velocity branches plus the learned per-joint signature."""

    def __init__(
        self, config: ModelConfig, params: ParameterStore, rng: np.random.Generator
    ):
        d = config.d
        self.config = config
        self.w_pos = params.add("embed.w_pos", uniform_init(rng, (2, d), 2), decay=True)
        self.w_vel = None
        if config.uses_velocity:
            self.w_vel = params.add(
                "embed.w_vel", uniform_init(rng, (2, d), 2), decay=True
            )
        self.alpha = params.add("embed.alpha", np.ones(()))
        self.beta = params.add("embed.beta", np.zeros(()))
        self.joint_identity = params.add(
            "embed.joint_identity",
            uniform_init(rng, (config.joints, d), d),
            decay=True,
        )

    def __call__(self, inputs: np.ndarray) -> tuple[Tensor, Tensor | None]:
        if inputs.ndim != 4 or inputs.shape[-1] != 3:
            raise ShapeMismatchError(
                f"Expected [B, T, J, 3] keypoints, got {inputs.shape}."
            )
        h_pos = add_joint_identity(
            embed_positions(inputs, self.w_pos, self.alpha, self.beta),
            self.joint_identity,
        )
        h_vel = None if self.w_vel is None else embed_velocities(inputs, self.w_vel)
        return h_pos, h_vel
