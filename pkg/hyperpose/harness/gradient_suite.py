"""Finite-difference check of every parameter of a small network and its loss."""
from __future__ import annotations

import numpy as np

from hyperpose.autodiff.gradcheck import GradcheckReport, gradcheck
from hyperpose.geometry.lorentz_core import checked_mode
from hyperpose.kinematics.skeleton import load_skeleton
from hyperpose.losses.riemannian import PoseLoss
from hyperpose.models.model_config import ModelConfig
from hyperpose.models.train_config import TrainConfig
from hyperpose.network.network import HyperPoseNetwork

TOY_SKELETON = "toy_5"
TOY_FRAMES = 4


def toy_model_config(**overrides) -> ModelConfig:
    values = dict(
        d=16,
        heads=2,
        spatial_layers=2,
        temporal_windows=(1, 2),
        mlp_ratio=2,
        dropout=0.0,
        joints=5,
        frames=TOY_FRAMES,
    )
    values.update(overrides)
    return ModelConfig(**values)


def toy_batch(rng: np.random.Generator, joints: int, frames: int = TOY_FRAMES):
    """Random keypoints (confidence away from 0) and 3D targets in mm."""
    keypoints = rng.uniform(-0.5, 0.5, size=(1, frames, joints, 2))
    confidence = rng.uniform(0.3, 1.0, size=(1, frames, joints, 1))
    targets = rng.normal(0, 200, size=(1, frames, joints, 3))
    return np.concatenate([keypoints, confidence], axis=-1), targets


def check_model_gradients(
    model_config: ModelConfig | None = None,
    h: float = 1e-6,
    tol: float = 1e-3,
    max_entries: int | None = 16,
    seed: int = 0,
) -> GradcheckReport:
    """
    Gradcheck of the full objective in fp64.

    Every loss term is on (the curriculum weight is 1) so that the velocity
    and bone terms and the uncertainty weights are reached.

    Only `max_entries` randomly chosen entries (seeded by `seed`) of every
    parameter tensor are perturbed; tensors with fewer entries are checked
    whole. ``max_entries=None`` checks every entry of every tensor.
    """
    config = model_config or toy_model_config()
    skeleton = load_skeleton(TOY_SKELETON, config.hop_convention)
    network = HyperPoseNetwork(config, skeleton, np.float64, seed=seed).eval()
    loss = PoseLoss(TrainConfig(use_curriculum=False), skeleton, np.float64)
    rng = np.random.default_rng(seed)
    # moves every parameter away from its init, where e.g. gamma_2 = 0
    for p in network.params:
        p.data = p.data + rng.normal(0, 0.05, size=p.shape)
    inputs, targets = toy_batch(rng, config.joints, config.frames)
    params = list(network.params) + list(loss.params)

    def objective():
        return loss(network(inputs), targets, epoch=0).total

    with checked_mode(False):
        return gradcheck(objective, params, h=h, tol=tol, max_entries=max_entries)
