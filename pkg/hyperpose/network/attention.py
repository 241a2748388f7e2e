"""
Spatial (HKPSA) and temporal attention.

Spatial attention runs over the J joints of every frame. Its logit is the sum
of a Lorentz proximity term on hyperboloid-lifted queries and keys, a
kinematic term penalising velocity mismatch and a k-hop skeleton bias.
Temporal attention runs over the frames of every joint, restricted to a band
of half-width W.
"""
from __future__ import annotations

import collections
from typing import Callable

import numpy as np

from hyperpose.autodiff import manifold_ops, ops
from hyperpose.autodiff.tensor import Tensor, as_tensor
from hyperpose.geometry import lorentz_core
from hyperpose.hyperpose_exceptions import DistributionError, ManifoldDomainError
from hyperpose.kinematics.skeleton import Skeleton, hop_bias_logits
from hyperpose.models.constants import HOP_COUNT
from hyperpose.models.model_config import ModelConfig
from hyperpose.network.parameters import ParameterStore, uniform_init

LIFT_SITE = "hkpsa.qk_lift"
# softplus^-1(1): temperatures and velocity weights start at 1
UNIT_SOFTPLUS_RAW = float(np.log(np.e - 1))

DriftProbe = Callable[[str, np.ndarray], None]


class AttentionOpCounter:
    """Multiply-adds of the score and aggregation products, per attention kind."""

    def __init__(self):
        self.macs: collections.Counter = collections.Counter()

    def add(self, kind: str, count: int) -> None:
        self.macs[kind] += int(count)

    def reset(self) -> None:
        self.macs.clear()


attention_macs = AttentionOpCounter()


def lorentz_proximity_logit(q, k, tau: float) -> np.ndarray:
    """(1 + <q, k>_L) / tau, at most 0 and equal to 0 iff q = k."""
    if tau <= 0:
        raise ManifoldDomainError(f"The temperature must be positive, got {tau}.")
    return (1 + lorentz_core.lorentz_inner(q, k)) / tau


def attention_entropy(weights, atol: float = 1e-5) -> float:
    """Mean Shannon entropy (nats) over every row of the last axis."""
    w = np.asarray(weights, dtype=np.float64)
    if w.size == 0:
        raise DistributionError("No attention rows to measure.")
    if np.any(~np.isfinite(w)) or np.any(w < -atol):
        raise DistributionError("Attention weights must be finite and non-negative.")
    sums = np.sum(w, axis=-1)
    if np.any(np.abs(sums - 1) > atol):
        raise DistributionError(
            f"Attention rows must sum to 1, worst row sums to"
            f" {float(sums.flat[np.argmax(np.abs(sums - 1))]):.6f}."
        )
    w = np.clip(w, 0, None)
    terms = np.where(w > 0, -w * np.log(np.where(w > 0, w, 1)), 0)
    return float(np.mean(np.sum(terms, axis=-1)))


def split_heads(x: Tensor, heads: int) -> Tensor:
    """[..., N, d] -> [..., H, N, d/H]."""
    *lead, n, d = x.shape
    split = ops.reshape(x, (*lead, n, heads, d // heads))
    return ops.swapaxes(split, -3, -2)


def merge_heads(x: Tensor) -> Tensor:
    """[..., H, N, dh] -> [..., N, H * dh]."""
    *lead, h, n, dh = x.shape
    return ops.reshape(ops.swapaxes(x, -3, -2), (*lead, n, h * dh))


def banded_attention(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    window: int,
    tau,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
    training: bool = False,
) -> tuple[Tensor, Tensor]:
    """
    Softmax attention of every position t over t-W..t+W along axis -2.

    Neighbours outside the sequence are excluded from the softmax, so that a
    band wider than the sequence is exactly full attention. `tau` must
    broadcast onto the [..., T, 1, 2W+1] logits. Returns the [..., T, dh]
    output and the [..., T, 1, 2W+1] weights.
    """
    frames, dh = q.shape[-2], q.shape[-1]
    window = max(0, min(window, frames - 1))
    k_band, valid = ops.band_extract(k, window, axis=-2)
    v_band, _ = ops.band_extract(v, window, axis=-2)
    q_rows = ops.reshape(q, (*q.shape[:-1], 1, dh))
    logits = ops.matmul(q_rows, ops.swapaxes(k_band, -1, -2))
    logits = ops.div(ops.scale(logits, 1 / np.sqrt(dh)), as_tensor(tau, like=q))
    mask = np.where(valid, 0.0, -np.inf).astype(q.dtype)[:, None, :]
    weights = ops.softmax(logits, mask)
    dropped = ops.dropout(weights, dropout_rate, rng, training)
    out = ops.reshape(ops.matmul(dropped, v_band), q.shape)
    rows = int(np.prod(q.shape[:-2]))
    attention_macs.add("banded", 2 * dh * rows * int(valid.sum()))
    return out, weights


def dense_attention(q: Tensor, k: Tensor, v: Tensor, tau) -> tuple[Tensor, Tensor]:
    """Full softmax attention along axis -2.

    Reference implementation checked against :func:`banded_attention`.
    """
    frames, dh = q.shape[-2], q.shape[-1]
    logits = ops.matmul(q, ops.swapaxes(k, -1, -2))
    logits = ops.div(ops.scale(logits, 1 / np.sqrt(dh)), as_tensor(tau, like=q))
    weights = ops.softmax(logits)
    rows = int(np.prod(q.shape[:-2]))
    attention_macs.add("dense", 2 * dh * rows * frames * frames)
    return ops.matmul(weights, v), weights


class HkpsaAttention:
    """
    Multi-head spatial attention over joints.

    The fused projection W_QKV is applied once to the position and velocity
    streams concatenated along the joint axis, then the rows are split back:
    the 2J projected rows are the J position rows followed by the J velocity
    rows, each one the row projected on its own with the shared weights.
    Position queries and keys are clipped to r_q and lifted with exp_o for the
    proximity logit; velocity queries and keys feed the kinematic logit; values
    come from the position stream and stay in the tangent space.
    """

    def __init__(
        self,
        config: ModelConfig,
        skeleton: Skeleton,
        params: ParameterStore,
        prefix: str,
        rng: np.random.Generator,
    ):
        d, h = config.d, config.heads
        self.config = config
        self.skeleton = skeleton
        self.w_qkv = params.add(
            f"{prefix}.w_qkv", uniform_init(rng, (d, 3 * d), d), decay=True
        )
        self.b_qkv = params.add(f"{prefix}.b_qkv", np.zeros(3 * d))
        self.tau_raw = params.add(f"{prefix}.tau_raw", np.full(h, UNIT_SOFTPLUS_RAW))
        self.lambda_raw = None
        if config.uses_velocity:
            self.lambda_raw = params.add(
                f"{prefix}.lambda_raw",
                np.full(1 if config.shared_lambda else h, UNIT_SOFTPLUS_RAW),
            )
        self.gamma = None
        if config.use_topology:
            gamma = np.zeros((h, HOP_COUNT))
            gamma[:, 0] = 1
            self.gamma = params.add(f"{prefix}.gamma", gamma)
        self.w_o = params.add(f"{prefix}.w_o", uniform_init(rng, (d, d), d), decay=True)
        self.b_o = params.add(f"{prefix}.b_o", np.zeros(d))
        self.last_weights: np.ndarray | None = None

    def temperatures(self) -> Tensor:
        return ops.softplus(self.tau_raw)

    def velocity_weights(self) -> Tensor | None:
        return None if self.lambda_raw is None else ops.softplus(self.lambda_raw)

    def topology_bias(self) -> Tensor:
        gamma = self.gamma
        if self.config.freeze_higher_hops:
            keep = np.zeros(gamma.shape, dtype=gamma.dtype)
            keep[:, 0] = 1
            gamma = ops.mul(gamma, Tensor(keep))
        return hop_bias_logits(self.skeleton, gamma)

    def __call__(
        self,
        x: Tensor,
        velocity: Tensor | None,
        training: bool = False,
        rng: np.random.Generator | None = None,
        probe: DriftProbe | None = None,
    ) -> Tensor:
        config = self.config
        d, heads = config.d, config.heads
        if velocity is not None:
            joints = x.shape[-2]
            streams = ops.concat([x, velocity], axis=-2)
            qkv = ops.add(ops.matmul(streams, self.w_qkv), self.b_qkv)
            position, kinematic = ops.split(qkv, [joints, joints], axis=-2)
        else:
            position = ops.add(ops.matmul(x, self.w_qkv), self.b_qkv)
            kinematic = None
        parts = ops.split(position, [d, d, d], axis=-1)
        q, k, v = (split_heads(t, heads) for t in parts)
        r_q, _ = lorentz_core.clip_radii(config.r_q, config.r_safety)
        q = ops.clip_norm(q, r_q)
        k = ops.clip_norm(k, r_q)
        tau = ops.reshape(self.temperatures(), (heads, 1, 1))
        if config.attention_kind == "lorentz":
            with manifold_ops.map_site(LIFT_SITE):
                q_lift = manifold_ops.exp_origin(q)
                k_lift = manifold_ops.exp_origin(k)
            if probe is not None:
                probe("q", q_lift.data)
                probe("k", k_lift.data)
            inner = manifold_ops.pairwise_lorentz_inner(q_lift, k_lift)
            logits = ops.div(ops.add(inner, 1.0), tau)
        else:
            dot = ops.matmul(q, ops.swapaxes(k, -1, -2))
            logits = ops.div(ops.scale(dot, 1 / np.sqrt(config.d_head)), tau)
        if kinematic is not None:
            q_vel, k_vel, _ = ops.split(kinematic, [d, d, d], axis=-1)
            sqdist = manifold_ops.pairwise_sqdist(
                split_heads(q_vel, heads), split_heads(k_vel, heads)
            )
            lam = ops.reshape(self.velocity_weights(), (-1, 1, 1))
            logits = ops.sub(logits, ops.mul(sqdist, lam))
        if self.gamma is not None:
            logits = ops.add(logits, self.topology_bias())
        weights = ops.softmax(logits)
        self.last_weights = weights.data
        weights = ops.dropout(weights, config.dropout, rng, training)
        out = merge_heads(ops.matmul(weights, v))
        return ops.add(ops.matmul(out, self.w_o), self.b_o)


class TemporalAttention:
    """Multi-head banded attention over the frames of every joint."""

    def __init__(
        self,
        config: ModelConfig,
        params: ParameterStore,
        prefix: str,
        window: int,
        rng: np.random.Generator,
    ):
        d, h = config.d, config.heads
        self.config = config
        self.window = window
        self.w_qkv = params.add(
            f"{prefix}.w_qkv", uniform_init(rng, (d, 3 * d), d), decay=True
        )
        self.b_qkv = params.add(f"{prefix}.b_qkv", np.zeros(3 * d))
        self.tau_raw = params.add(f"{prefix}.tau_raw", np.full(h, UNIT_SOFTPLUS_RAW))
        self.w_o = params.add(f"{prefix}.w_o", uniform_init(rng, (d, d), d), decay=True)
        self.b_o = params.add(f"{prefix}.b_o", np.zeros(d))
        self.last_weights: np.ndarray | None = None

    def __call__(
        self,
        x: Tensor,
        training: bool = False,
        rng: np.random.Generator | None = None,
    ) -> Tensor:
        config = self.config
        d, heads = config.d, config.heads
        batch, frames, joints, _ = x.shape
        qkv = ops.add(ops.matmul(x, self.w_qkv), self.b_qkv)

        def per_joint(t: Tensor) -> Tensor:
            # [B, T, J, d] -> [B, J, H, T, dh]
            split = ops.reshape(t, (batch, frames, joints, heads, config.d_head))
            return ops.transpose(split, (0, 2, 3, 1, 4))

        q, k, v = (per_joint(t) for t in ops.split(qkv, [d, d, d], axis=-1))
        tau = ops.reshape(ops.softplus(self.tau_raw), (heads, 1, 1, 1))
        out, weights = banded_attention(
            q, k, v, self.window, tau, config.dropout, rng, training
        )
        self.last_weights = weights.data[..., 0, :]
        out = ops.transpose(out, (0, 3, 1, 2, 4))
        out = ops.reshape(out, (batch, frames, joints, d))
        return ops.add(ops.matmul(out, self.w_o), self.b_o)
