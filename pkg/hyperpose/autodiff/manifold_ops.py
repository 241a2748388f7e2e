"""
Differentiable Lorentz-model ops.

exp_o and log_o are fused primitives with analytic vector-Jacobian products
whose small-norm branches mirror the Taylor guards of
:mod:`hyperpose.geometry.lorentz_core`. Both record every call in
:data:`map_calls` under the current call site, see :func:`map_site`.
"""
from __future__ import annotations

import collections
import contextlib
import contextvars

import numpy as np

from hyperpose.autodiff import ops
from hyperpose.autodiff.tensor import Tensor, as_tensor, make_result
from hyperpose.geometry import lorentz_core
from hyperpose.geometry.lorentz_core import LOG_BRANCH_Y0
from hyperpose.models.constants import SMALL_NORM

# below this norm the derivative factors switch to their series
SERIES_NORM = 1e-3

_SITE = contextvars.ContextVar("hyperpose_map_site", default="unlabelled")


class MapCallCounter:
    """Counts exp_o / log_o evaluations per (map, call site)."""

    def __init__(self):
        self.counts: collections.Counter = collections.Counter()

    def record(self, name: str) -> None:
        self.counts[(name, _SITE.get())] += 1

    def reset(self) -> None:
        self.counts.clear()

    def sites(self, name: str) -> set[str]:
        return {
            site
            for (map_name, site), n in self.counts.items()
            if map_name == name and n
        }

    def total(self, name: str) -> int:
        return sum(n for (map_name, _), n in self.counts.items() if map_name == name)


map_calls = MapCallCounter()


@contextlib.contextmanager
def map_site(site: str):
    """Label the exp_o / log_o calls made inside the block."""
    token = _SITE.set(site)
    try:
        yield
    finally:
        _SITE.reset(token)


def exp_origin(v: Tensor) -> Tensor:
    """exp_o of tangents given by their spatial part, [..., d] -> [..., d+1]."""
    map_calls.record("exp_origin")
    out = lorentz_core.exp_origin(v.data)
    r = np.linalg.norm(v.data, axis=-1, keepdims=True)
    safe_r = np.where(r > 0, r, 1)
    sinc = np.where(r < SMALL_NORM, 1 + r**2 / 6, np.sinh(r) / safe_r)
    # d(sinh r / r)/dr divided by r
    series = r < SERIES_NORM
    safe_series_r = np.where(series, 1, r)
    sinc_slope = np.where(
        series,
        1 / 3 + r**2 / 30,
        (safe_series_r * np.cosh(r) - np.sinh(r)) / safe_series_r**3,
    )

    def vjp(g):
        g_time, g_space = g[..., :1], g[..., 1:]
        radial = np.sum(g_space * v.data, axis=-1, keepdims=True)
        return ((g_time * sinc + radial * sinc_slope) * v.data + sinc * g_space,)

    return make_result("exp_origin", out, (v,), vjp)


def log_origin(y: Tensor) -> Tensor:
    """log_o of points, [..., d+1] -> [..., d], spatial part of the tangent."""
    map_calls.record("log_origin")
    out = lorentz_core.log_origin(y.data)
    y0 = y.data[..., :1]
    spatial = y.data[..., 1:]
    n = np.linalg.norm(spatial, axis=-1, keepdims=True)
    scale = lorentz_core.log_origin_scale(y0, n)
    near = y0 < LOG_BRANCH_Y0
    series = n < SERIES_NORM
    safe_n = np.where(series, 1, n)
    # near the origin the factor is arcsinh(n)/n, far from it arccosh(y0)/n
    near_slope = np.where(
        series,
        -1 / 3 + 0.3 * n**2,
        (safe_n / np.sqrt(1 + safe_n**2) - np.arcsinh(safe_n)) / safe_n**3,
    )
    eps = lorentz_core.active_eps()
    far_n = np.maximum(n, eps)
    far_slope = -np.arccosh(np.maximum(y0, 1)) / far_n**3
    slope = np.where(near, near_slope, far_slope)
    y0_factor = np.where(
        near, 0, 1 / (far_n * np.sqrt(np.maximum(y0**2 - 1, eps)))
    )

    def vjp(g):
        radial = np.sum(g * spatial, axis=-1, keepdims=True)
        g_time = radial * y0_factor
        g_space = scale * g + slope * radial * spatial
        return (np.concatenate([g_time, g_space], axis=-1),)

    return make_result("log_origin", out, (y,), vjp)


def project_hyperboloid(phi: Tensor) -> Tensor:
    """pi(phi) = (sqrt(1 + |phi|^2), phi)."""
    time = ops.sqrt(ops.add(ops.sum(ops.square(phi), axis=-1, keepdims=True), 1.0))
    return ops.concat([time, phi], axis=-1)


def _time_sign(like: Tensor) -> Tensor:
    sign = np.ones(like.shape[-1], dtype=like.dtype)
    sign[0] = -1
    return Tensor(sign)


def lorentz_inner(x: Tensor, y: Tensor) -> Tensor:
    """<x, y>_L along the last axis."""
    x, y = as_tensor(x), as_tensor(y, like=x)
    return ops.sum(ops.mul(ops.mul(x, y), _time_sign(x)), axis=-1)


def pairwise_lorentz_inner(q: Tensor, k: Tensor) -> Tensor:
    """<q_i, k_j>_L for q [..., N, d+1] and k [..., M, d+1] -> [..., N, M]."""
    return ops.matmul(ops.mul(q, _time_sign(q)), ops.swapaxes(k, -1, -2))


def geodesic_distance(x: Tensor, y: Tensor) -> Tensor:
    return ops.arccosh(ops.scale(lorentz_inner(x, y), -1.0))


def pairwise_sqdist(a: Tensor, b: Tensor) -> Tensor:
    """|a_i|^2 + |b_j|^2 - 2<a_i, b_j>, clamped at 0.

    Never materialises the N x M x d difference tensor.
    """
    a_sq = ops.sum(ops.square(a), axis=-1, keepdims=True)
    b_sq = ops.swapaxes(ops.sum(ops.square(b), axis=-1, keepdims=True), -1, -2)
    cross = ops.matmul(a, ops.swapaxes(b, -1, -2))
    full = cross.shape
    total = ops.add(
        ops.add(ops.broadcast_to(a_sq, full), ops.broadcast_to(b_sq, full)),
        ops.scale(cross, -2.0),
    )
    return ops.clamp_min(total, 0.0)
