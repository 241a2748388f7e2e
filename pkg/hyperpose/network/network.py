"""
The tangent-flow network: phase-space embedding, interleaved spatial and
temporal blocks, per-joint output head.
"""
from __future__ import annotations

import dataclasses

import numpy as np

from hyperpose.autodiff import ops
from hyperpose.autodiff.tensor import Tensor
from hyperpose.geometry import lorentz_core
from hyperpose.hyperpose_exceptions import ShapeMismatchError
from hyperpose.kinematics.skeleton import Skeleton
from hyperpose.models.model_config import ModelConfig
from hyperpose.network.blocks import LayerNorm, SpatialBlock, TemporalBlock
from hyperpose.network.embedding import PhaseSpaceEmbedding
from hyperpose.network.parameters import ParameterStore, uniform_init
from hyperpose.utils import make_rng


@dataclasses.dataclass(frozen=True)
class DriftRecord:
    block: str
    site: str
    drift: float


class OutputHead:
    """y_tj = W2_j GELU(W1_j LN(h_tj)), one weight pair per joint, no biases."""

    def __init__(self, config: ModelConfig, params: ParameterStore, rng):
        d, ff, joints = config.d, config.d_ff, config.joints
        self.config = config
        self.norm = LayerNorm(params, "head.ln", d)
        self.w1 = params.add(
            "head.w1", uniform_init(rng, (joints, d, ff), d), decay=True
        )
        self.w2 = params.add(
            "head.w2", uniform_init(rng, (joints, ff, 3), ff), decay=True
        )

    def __call__(self, h: Tensor) -> Tensor:
        batch, frames, joints, d = h.shape
        # joints lead so that every joint multiplies its own matrices
        x = ops.transpose(self.norm(h), (2, 0, 1, 3))
        x = ops.reshape(x, (joints, batch * frames, d))
        hidden = ops.gelu(ops.matmul(x, self.w1))
        out = ops.reshape(ops.matmul(hidden, self.w2), (joints, batch, frames, 3))
        out = ops.transpose(out, (1, 2, 0, 3))
        return ops.scale(out, self.config.output_scale)


class HyperPoseNetwork:
    """
    2D keypoint sequences [B, T, J, 3] (x, y, confidence) to 3D joints
    [B, T, J, 3] in millimetres.

    Parameters
    ----------
    config: ModelConfig
    skeleton: Skeleton
        Must have ``config.joints`` joints.
    dtype:
        Precision of the parameters and of every intermediate.
    seed: int | np.random.Generator | None
        Seeds the parameter init and the default dropout stream.
    """

    def __init__(
        self,
        config: ModelConfig,
        skeleton: Skeleton,
        dtype=np.float64,
        seed: int | np.random.Generator | None = 0,
    ):
        if skeleton.num_joints != config.joints:
            raise ShapeMismatchError(
                f"The model expects {config.joints} joints, the skeleton has"
                f" {skeleton.num_joints}."
            )
        rng = make_rng(seed)
        self.config = config
        self.skeleton = skeleton
        self.params = ParameterStore(dtype)
        self.embedding = PhaseSpaceEmbedding(config, self.params, rng)
        self.blocks: list[tuple[SpatialBlock, TemporalBlock]] = []
        for i, window in enumerate(config.temporal_windows):
            spatial = SpatialBlock(config, skeleton, self.params, f"spatial{i}", rng)
            temporal = TemporalBlock(config, self.params, f"temporal{i}", window, rng)
            self.blocks.append((spatial, temporal))
        self.head = OutputHead(config, self.params, rng)
        self.training = False
        self.dropout_rng = make_rng(rng.integers(2**32))
        self.watch_drift = True
        self.drift_records: list[DriftRecord] = []
        self.last_hidden: np.ndarray | None = None

    def train(self) -> HyperPoseNetwork:
        self.training = True
        return self

    def eval(self) -> HyperPoseNetwork:
        self.training = False
        return self

    def count_parameters(self) -> int:
        return self.params.count()

    def forward(self, inputs, rng: np.random.Generator | None = None) -> Tensor:
        """
        Predict 3D joints from keypoints.

        A single [T, J, 3] sequence is accepted and returns a [T, J, 3]
        prediction. Manifold drift of every Q/K lift is appended to
        ``drift_records`` as a detached float.
        """
        inputs = np.asarray(inputs, dtype=self.params.dtype)
        single = inputs.ndim == 3
        if single:
            inputs = inputs[None]
        if inputs.ndim != 4 or inputs.shape[2:] != (self.config.joints, 3):
            raise ShapeMismatchError(
                f"Expected [B, T, {self.config.joints}, 3] keypoints, got"
                f" {inputs.shape}."
            )
        rng = rng if rng is not None else self.dropout_rng
        self.drift_records = []
        h, h_vel = self.embedding(inputs)
        for i, (spatial, temporal) in enumerate(self.blocks):
            h = spatial(h, h_vel, self.training, rng, self._probe(f"spatial{i}"))
            h = self._safety_clip(h)
            h = temporal(h, self.training, rng)
            h = self._safety_clip(h)
        self.last_hidden = h.data
        out = self.head(h)
        return out[0] if single else out

    __call__ = forward

    def _safety_clip(self, h: Tensor) -> Tensor:
        if not self.config.safety_clip:
            return h
        _, r_safety = lorentz_core.clip_radii(self.config.r_q, self.config.r_safety)
        return ops.clip_norm(h, r_safety)

    def _probe(self, block: str):
        if not self.watch_drift:
            return None

        def record(site: str, points: np.ndarray) -> None:
            drift = lorentz_core.manifold_drift(points)
            self.drift_records.append(DriftRecord(block, site, drift))

        return record

    def max_drift(self) -> float:
        if not self.drift_records:
            return 0.0
        return max(r.drift for r in self.drift_records)

    def attention_weights(self) -> dict[str, np.ndarray]:
        """Weights of the last forward pass, per attention sub-layer."""
        weights = {}
        for i, (spatial, temporal) in enumerate(self.blocks):
            if spatial.attention.last_weights is not None:
                weights[f"spatial{i}"] = spatial.attention.last_weights
            if temporal.attention.last_weights is not None:
                weights[f"temporal{i}"] = temporal.attention.last_weights
        return weights

    def joint_embeddings(self) -> np.ndarray | None:
        """exp_o of the last hidden state, fp64 Lorentz points [..., J, d+1]."""
        if self.last_hidden is None:
            return None
        return lorentz_core.exp_origin(self.last_hidden.astype(np.float64))
