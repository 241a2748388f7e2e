"""
Pre-norm residual blocks of the tangent-flow stack.

Every sub-layer reads LayerNorm(h) and adds its output to h. The hidden state
stays an origin-tangent vector throughout, so the residual sum is an ordinary
vector sum.
"""
from __future__ import annotations

import numpy as np

from hyperpose.autodiff import ops
from hyperpose.autodiff.tensor import Tensor
from hyperpose.kinematics.skeleton import Skeleton
from hyperpose.models.model_config import ModelConfig
from hyperpose.network.attention import DriftProbe, HkpsaAttention, TemporalAttention
from hyperpose.network.parameters import ParameterStore, uniform_init


class LayerNorm:
    def __init__(self, params: ParameterStore, prefix: str, width: int):
        self.gamma = params.add(f"{prefix}.gamma", np.ones(width))
        self.beta = params.add(f"{prefix}.beta", np.zeros(width))

    def __call__(self, x: Tensor) -> Tensor:
        return ops.layer_norm(x, self.gamma, self.beta)


class Mlp:
    """LN -> Linear(d, d_ff) -> GELU -> Linear(d_ff, d) -> dropout, with residual."""

    def __init__(self, config: ModelConfig, params: ParameterStore, prefix: str, rng):
        d, ff = config.d, config.d_ff
        self.config = config
        self.norm = LayerNorm(params, f"{prefix}.ln", d)
        self.w1 = params.add(f"{prefix}.w1", uniform_init(rng, (d, ff), d), decay=True)
        self.b1 = params.add(f"{prefix}.b1", np.zeros(ff))
        self.w2 = params.add(f"{prefix}.w2", uniform_init(rng, (ff, d), ff), decay=True)
        self.b2 = params.add(f"{prefix}.b2", np.zeros(d))

    def __call__(self, h: Tensor, training: bool, rng) -> Tensor:
        hidden = ops.gelu(ops.add(ops.matmul(self.norm(h), self.w1), self.b1))
        out = ops.add(ops.matmul(hidden, self.w2), self.b2)
        return ops.add(h, ops.dropout(out, self.config.dropout, rng, training))


class SpatialBlock:
    """HKPSA sub-layer then MLP sub-layer, over the joints of every frame."""

    def __init__(
        self,
        config: ModelConfig,
        skeleton: Skeleton,
        params: ParameterStore,
        prefix: str,
        rng: np.random.Generator,
    ):
        self.norm = LayerNorm(params, f"{prefix}.ln", config.d)
        self.velocity_norm = None
        if config.uses_velocity:
            self.velocity_norm = LayerNorm(params, f"{prefix}.ln_vel", config.d)
        self.attention = HkpsaAttention(config, skeleton, params, f"{prefix}.attn", rng)
        self.mlp = Mlp(config, params, f"{prefix}.mlp", rng)

    def __call__(
        self,
        h: Tensor,
        h_vel: Tensor | None,
        training: bool = False,
        rng: np.random.Generator | None = None,
        probe: DriftProbe | None = None,
    ) -> Tensor:
        velocity = None
        if self.velocity_norm is not None and h_vel is not None:
            velocity = self.velocity_norm(h_vel)
        h = ops.add(h, self.attention(self.norm(h), velocity, training, rng, probe))
        return self.mlp(h, training, rng)


class TemporalBlock:
    """Banded temporal sub-layer of half-width ``window`` then MLP sub-layer."""

    def __init__(
        self,
        config: ModelConfig,
        params: ParameterStore,
        prefix: str,
        window: int,
        rng: np.random.Generator,
    ):
        self.window = window
        self.norm = LayerNorm(params, f"{prefix}.ln", config.d)
        self.attention = TemporalAttention(
            config, params, f"{prefix}.attn", window, rng
        )
        self.mlp = Mlp(config, params, f"{prefix}.mlp", rng)

    def __call__(
        self,
        h: Tensor,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        h = ops.add(h, self.attention(self.norm(h), training, rng))
        return self.mlp(h, training, rng)
