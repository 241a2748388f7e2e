from __future__ import annotations

import numpy as np
import pytest

from hyperpose.autodiff.tensor import Tensor
from hyperpose.geometry import lorentz_core
from hyperpose.hyperpose_exceptions import DistributionError, ManifoldDomainError
from hyperpose.kinematics.skeleton import load_skeleton
from hyperpose.models.stability_config import StabilityConfig
from hyperpose.network.attention import (
    HkpsaAttention,
    TemporalAttention,
    attention_entropy,
    attention_macs,
    banded_attention,
    dense_attention,
    lorentz_proximity_logit,
    merge_heads,
    split_heads,
)
from hyperpose.network.parameters import ParameterStore
from hyperpose.tests.testing_utils import stub_model_config, stub_points


def random_heads(rng, heads=2, frames=6, d_head=4):
    return [Tensor(rng.normal(size=(heads, frames, d_head))) for _ in range(3)]


class Test_lorentz_proximity_logit:
    def test_zero_on_itself(self):
        q = stub_points(np.random.default_rng(0), 5)
        np.testing.assert_allclose(lorentz_proximity_logit(q, q, 1.0), 0, atol=1e-12)

    def test_known_value(self):
        q = np.array([1.0, 0, 0])
        k = np.array([np.sqrt(2), 1, 0])
        np.testing.assert_allclose(lorentz_proximity_logit(q, k, 1.0), 1 - np.sqrt(2))

    def test_never_positive(self):
        rng = np.random.default_rng(1)
        q, k = stub_points(rng, 50), stub_points(rng, 50)
        assert np.all(lorentz_proximity_logit(q, k, 0.5) <= 1e-12)

    def test_ordering_matches_geodesic_distance(self):
        rng = np.random.default_rng(2)
        agree = 0
        for _ in range(1000):
            q, k1, k2 = stub_points(rng, 3, d=4, radius=3.0)
            by_logit = lorentz_proximity_logit(q, k1, 0.7) > lorentz_proximity_logit(
                q, k2, 0.7
            )
            d = lorentz_core.geodesic_distance
            agree += by_logit == (d(q, k1) < d(q, k2))
        assert agree == 1000

    def test_rejects_non_positive_temperature(self):
        with pytest.raises(ManifoldDomainError):
            lorentz_proximity_logit(np.array([1.0, 0]), np.array([1.0, 0]), 0.0)


class Test_attention_entropy:
    def test_one_hot(self):
        assert attention_entropy(np.eye(4)) == 0

    @pytest.mark.parametrize("width", [7, 17])
    def test_uniform(self, width):
        weights = np.full((3, width), 1 / width)
        np.testing.assert_allclose(attention_entropy(weights), np.log(width))

    @pytest.mark.parametrize(
        "weights",
        [np.array([[0.5, 0.6]]), np.array([[1.5, -0.5]]), np.array([[np.nan, 1]])],
    )
    def test_malformed_rows(self, weights):
        with pytest.raises(DistributionError):
            attention_entropy(weights)

    def test_empty(self):
        with pytest.raises(DistributionError):
            attention_entropy(np.empty((0, 3)))


class Test_banded_attention:
    @pytest.mark.parametrize("frames", [1, 2, 5, 8])
    def test_wide_band_equals_dense(self, frames):
        q, k, v = random_heads(np.random.default_rng(frames), frames=frames)
        dense, _ = dense_attention(q, k, v, 0.8)
        for window in (frames - 1, frames + 3):
            banded, _ = banded_attention(q, k, v, window, 0.8)
            np.testing.assert_allclose(banded.data, dense.data, atol=1e-6)

    def test_band_excludes_far_frames(self):
        q, k, v = random_heads(np.random.default_rng(0), frames=9)
        out, weights = banded_attention(q, k, v, 1, 1.0)
        assert weights.shape == (2, 9, 1, 3)
        np.testing.assert_allclose(weights.data.sum(axis=-1), 1)
        # the first frame has no left neighbour
        assert np.all(weights.data[:, 0, 0, 0] == 0)
        # moving a frame outside the band leaves frame 0 untouched
        v_far = Tensor(v.data.copy())
        v_far.data[:, 5:] += 100
        k_far = Tensor(k.data.copy())
        k_far.data[:, 5:] -= 100
        moved, _ = banded_attention(q, k_far, v_far, 1, 1.0)
        np.testing.assert_allclose(moved.data[:, 0], out.data[:, 0])

    def test_single_frame_is_identity_weight(self):
        q, k, v = random_heads(np.random.default_rng(3), frames=1)
        out, weights = banded_attention(q, k, v, 3, 1.0)
        np.testing.assert_allclose(out.data, v.data)
        np.testing.assert_allclose(weights.data[..., 0, :].max(axis=-1), 1)

    def test_mac_counts(self):
        q, k, v = random_heads(np.random.default_rng(4), heads=2, frames=10, d_head=4)
        attention_macs.reset()
        banded_attention(q, k, v, 2, 1.0)
        dense_attention(q, k, v, 1.0)
        valid = 10 * 5 - 2 * 3
        assert attention_macs.macs["banded"] == 2 * 4 * 2 * valid
        assert attention_macs.macs["dense"] == 2 * 4 * 2 * 100

    def test_macs_are_linear_in_frames(self):
        rng = np.random.default_rng(5)
        frames = np.array([27, 54, 81, 135, 189, 243])
        counts = []
        for t in frames:
            q, k, v = random_heads(rng, heads=1, frames=int(t), d_head=2)
            attention_macs.reset()
            banded_attention(q, k, v, 9, 1.0)
            counts.append(attention_macs.macs["banded"])
        fit = np.polyfit(frames, counts, 1)
        residual = np.asarray(counts) - np.polyval(fit, frames)
        r_squared = 1 - residual.var() / np.var(counts)
        assert r_squared >= 0.999


def test_split_merge_heads_inverse():
    x = Tensor(np.random.default_rng(0).normal(size=(3, 5, 8)))
    heads = split_heads(x, 4)
    assert heads.shape == (3, 4, 5, 2)
    np.testing.assert_array_equal(merge_heads(heads).data, x.data)


class Test_HkpsaAttention:
    def build(self, **overrides):
        config = stub_model_config(**overrides)
        skeleton = load_skeleton("toy_5", config.hop_convention)
        params = ParameterStore(np.float64)
        attention = HkpsaAttention(
            config, skeleton, params, "attn", np.random.default_rng(0)
        )
        return config, attention

    def test_rows_are_distributions(self):
        config, attention = self.build()
        rng = np.random.default_rng(1)
        x = Tensor(rng.normal(size=(2, 8, 5, config.d)))
        out = attention(x, Tensor(rng.normal(size=(2, 8, 5, config.d))))
        assert out.shape == x.shape
        assert attention.last_weights.shape == (2, 8, config.heads, 5, 5)
        np.testing.assert_allclose(attention.last_weights.sum(axis=-1), 1)

    def test_equal_logits_give_uniform_weights(self):
        config, attention = self.build(use_topology=False)
        x = Tensor(np.zeros((1, 2, 5, config.d)))
        attention(x, Tensor(np.zeros((1, 2, 5, config.d))))
        np.testing.assert_allclose(attention.last_weights, 1 / 5)

    def test_zero_velocity_makes_lambda_irrelevant(self):
        config, attention = self.build()
        rng = np.random.default_rng(2)
        x = Tensor(rng.normal(size=(1, 3, 5, config.d)))
        # the kinematic stream is W_QKV applied to the velocity, bias included
        attention.b_qkv.data = np.zeros_like(attention.b_qkv.data)
        velocity = Tensor(np.zeros((1, 3, 5, config.d)))
        first = attention(x, velocity).data
        attention.lambda_raw.data = attention.lambda_raw.data + 5
        np.testing.assert_allclose(attention(x, velocity).data, first, atol=1e-12)

    def test_velocity_stream_leaves_position_projection(self):
        config, attention = self.build()
        rng = np.random.default_rng(5)
        x = Tensor(rng.normal(size=(2, 3, 5, config.d)))
        velocity = Tensor(rng.normal(size=(2, 3, 5, config.d)))
        # softplus(-60) ~ 1e-26 switches the kinematic logit off
        attention.lambda_raw.data = np.full_like(attention.lambda_raw.data, -60.0)
        with_velocity = attention(x, velocity).data
        np.testing.assert_allclose(with_velocity, attention(x, None).data, atol=1e-12)

    def test_kinematic_logit_uses_projected_velocity_rows(self):
        config, attention = self.build(use_topology=False)
        rng = np.random.default_rng(6)
        x = Tensor(np.zeros((1, 1, 5, config.d)))
        velocity = rng.normal(size=(1, 1, 5, config.d))
        attention(x, Tensor(velocity))
        projected = velocity @ attention.w_qkv.data + attention.b_qkv.data
        q_vel = projected[..., : config.d].reshape(5, config.heads, config.d_head)
        k_vel = projected[..., config.d : 2 * config.d].reshape(
            5, config.heads, config.d_head
        )
        sqdist = np.sum(
            (q_vel[:, None] - k_vel[None, :]) ** 2, axis=-1
        ).transpose(2, 0, 1)
        lam = attention.velocity_weights().data.reshape(-1, 1, 1)
        # zero positions leave the proximity logit at its constant (1 - 1) / tau
        logits = -lam * sqdist
        expected = np.exp(logits - logits.max(axis=-1, keepdims=True))
        expected /= expected.sum(axis=-1, keepdims=True)
        np.testing.assert_allclose(attention.last_weights[0, 0], expected, atol=1e-10)

    def test_topology_bias_favours_neighbours(self):
        config, attention = self.build(use_velocity_penalty=False)
        attention.gamma.data[:, 0] = 50.0
        x = Tensor(np.zeros((1, 1, 5, config.d)))
        attention(x, None)
        weights = attention.last_weights[0, 0, 0]
        # joint 4 (head) only touches joint 3 (spine)
        assert weights[4, 3] > 0.99

    def test_freeze_higher_hops(self):
        _, attention = self.build(freeze_higher_hops=True)
        attention.gamma.data[:] = 1.0
        bias = attention.topology_bias().data
        np.testing.assert_array_equal(bias[0, 1, 2], 0)
        np.testing.assert_array_equal(bias[0, 0, 1], 1)

    def test_euclidean_kind_does_not_lift(self):
        from hyperpose.autodiff import manifold_ops

        config, attention = self.build(attention_kind="euclidean")
        manifold_ops.map_calls.reset()
        x = Tensor(np.random.default_rng(3).normal(size=(1, 2, 5, config.d)))
        attention(x, Tensor(np.zeros_like(x.data)))
        assert manifold_ops.map_calls.total("exp_origin") == 0

    def test_scoped_radius_clips_the_lifts(self):
        config, attention = self.build()
        seen = []
        x = Tensor(10 * np.random.default_rng(7).normal(size=(1, 2, 5, config.d)))
        with lorentz_core.stability_scope(StabilityConfig(r_q=0.5, r_safety=1.0)):
            attention(x, None, probe=lambda site, points: seen.append(points))
        assert len(seen) == 2
        assert max(points[..., 0].max() for points in seen) <= np.cosh(0.5) + 1e-9

    def test_probe_sees_every_lift(self):
        config, attention = self.build()
        seen = []
        x = Tensor(np.random.default_rng(4).normal(size=(1, 2, 5, config.d)))
        attention(x, None, probe=lambda site, points: seen.append((site, points)))
        assert [site for site, _ in seen] == ["q", "k"]
        assert seen[0][1].shape == (1, 2, config.heads, 5, config.d_head + 1)
        assert lorentz_core.manifold_drift(seen[0][1]) < 1e-12


class Test_TemporalAttention:
    def test_shapes_and_weights(self):
        config = stub_model_config()
        params = ParameterStore(np.float64)
        attention = TemporalAttention(
            config, params, "temporal", 2, np.random.default_rng(0)
        )
        x = Tensor(np.random.default_rng(1).normal(size=(2, 8, 5, config.d)))
        out = attention(x)
        assert out.shape == x.shape
        assert attention.last_weights.shape == (2, 5, config.heads, 8, 5)
        np.testing.assert_allclose(attention.last_weights.sum(axis=-1), 1)
