"""
Primitives of the Lorentz (hyperboloid) model of hyperbolic space with
curvature -1.

Points of H^d are stored as arrays whose last axis has length d+1, the time
coordinate first. Tangent vectors at the origin o = (1, 0, ..., 0) are stored
by their d spatial coordinates only, the time coordinate being implicitly 0.
Every function accepts arbitrary leading batch dimensions.

Every primitive runs in the precision of its input but never below fp32.
Checked mode, on by default, validates that points lie on the hyperboloid
and raises :class:`ManifoldDomainError` otherwise. The training loop turns it
off with :func:`checked_mode`.

The guards (eps, drift tolerance and clip radii) default to the module
constants; :func:`stability_scope` replaces them by those of a
:class:`~hyperpose.models.stability_config.StabilityConfig`.
"""
from __future__ import annotations

import contextlib
import contextvars
import os

import numpy as np

from hyperpose.hyperpose_exceptions import ManifoldDomainError, ShapeMismatchError
from hyperpose.models.constants import (
    CHECKED_ENV_VAR,
    DRIFT_TOL_FP32,
    DRIFT_TOL_FP64,
    EPS,
    FP32_MACHINE_EPS,
    SMALL_NORM,
)

# below this time coordinate, log_o goes through arcsinh of the spatial norm
# since arccosh(y0) loses half of the significant digits next to 1.
LOG_BRANCH_Y0 = 1.5

_CHECKED = contextvars.ContextVar(
    "hyperpose_checked", default=os.environ.get(CHECKED_ENV_VAR, "1") != "0"
)
_STABILITY = contextvars.ContextVar("hyperpose_stability", default=None)


@contextlib.contextmanager
def checked_mode(enabled: bool = True):
    """Temporarily enable or disable on-manifold validation."""
    token = _CHECKED.set(enabled)
    try:
        yield
    finally:
        _CHECKED.reset(token)


def is_checked() -> bool:
    return _CHECKED.get()


@contextlib.contextmanager
def stability_scope(stability):
    """Run the primitives under the guards of a StabilityConfig."""
    token = _STABILITY.set(stability)
    try:
        yield stability
    finally:
        _STABILITY.reset(token)


def active_eps() -> float:
    stability = _STABILITY.get()
    return EPS if stability is None else stability.eps


def clip_radii(r_q: float, r_safety: float) -> tuple[float, float]:
    """The (r_q, r_safety) of the active StabilityConfig, else the given ones."""
    stability = _STABILITY.get()
    if stability is None:
        return r_q, r_safety
    return stability.r_q, stability.r_safety


def as_working_precision(values) -> np.ndarray:
    """Cast to a float array of at least fp32."""
    arr = np.asarray(values)
    if arr.dtype == np.float64 or arr.dtype == np.float32:
        return arr
    if np.issubdtype(arr.dtype, np.floating):
        return arr.astype(np.float32)
    return arr.astype(np.float64)


def default_drift_tol(arr: np.ndarray) -> float:
    stability = _STABILITY.get()
    if stability is not None:
        return stability.drift_tol
    return DRIFT_TOL_FP64 if arr.dtype == np.float64 else DRIFT_TOL_FP32


def lorentz_inner(x, y) -> np.ndarray:
    """-x0*y0 + sum_i xi*yi along the last axis, without any clamping."""
    x = as_working_precision(x)
    y = as_working_precision(y)
    if x.shape[-1] != y.shape[-1]:
        raise ShapeMismatchError(
            f"Lorentz inner product needs equal lengths, got {x.shape[-1]}"
            f" and {y.shape[-1]}."
        )
    if x.shape[-1] < 2:
        raise ShapeMismatchError(
            f"Lorentz vectors need at least 2 coordinates, got {x.shape[-1]}."
        )
    return -x[..., 0] * y[..., 0] + np.sum(x[..., 1:] * y[..., 1:], axis=-1)


def check_on_manifold(x, tol: float | None = None, what: str = "point") -> None:
    """Raise ManifoldDomainError if `x` is off the upper sheet, in checked mode."""
    if not is_checked():
        return
    x = as_working_precision(x)
    tol = default_drift_tol(x) if tol is None else tol
    residual = np.abs(lorentz_inner(x, x) + 1)
    if np.any(residual > tol):
        raise ManifoldDomainError(
            f"The {what} is off the hyperboloid: max |<x,x>_L + 1| ="
            f" {float(np.max(residual)):.3e} > {tol:.1e}."
        )
    if np.any(x[..., 0] < 1 - tol):
        raise ManifoldDomainError(
            f"The {what} is not on the upper sheet: min x0 ="
            f" {float(np.min(x[..., 0])):.6f}."
        )


def geodesic_distance(x, y, drift_tol: float | None = None) -> np.ndarray:
    """arccosh(-<x,y>_L), the argument clamped to >= 1 so that d(x, x) = 0."""
    check_on_manifold(x, drift_tol)
    check_on_manifold(y, drift_tol)
    z = -lorentz_inner(x, y)
    return np.arccosh(np.maximum(z, 1))


def exp_origin(v) -> np.ndarray:
    """Exponential map at the origin of a tangent vector given by its spatial part."""
    v = as_working_precision(v)
    r = np.linalg.norm(v, axis=-1, keepdims=True)
    small = r < SMALL_NORM
    safe_r = np.where(small, 1, r)
    time = np.where(small, 1 + r**2 / 2, np.cosh(r))
    scale = np.where(small, 1 + r**2 / 6, np.sinh(r) / safe_r)
    return np.concatenate([time, scale * v], axis=-1)


def log_origin(y, drift_tol: float | None = None) -> np.ndarray:
    """Logarithmic map at the origin, returning the spatial part of the tangent."""
    y = as_working_precision(y)
    if is_checked():
        tol = default_drift_tol(y) if drift_tol is None else drift_tol
        if np.any(y[..., 0] < 1 - max(tol, active_eps())):
            raise ManifoldDomainError(
                f"log_o needs y0 >= 1, got {float(np.min(y[..., 0])):.6f}."
            )
    y0 = y[..., :1]
    spatial = y[..., 1:]
    n = np.linalg.norm(spatial, axis=-1, keepdims=True)
    return log_origin_scale(y0, n) * spatial


def log_origin_scale(y0: np.ndarray, n: np.ndarray) -> np.ndarray:
    """The factor arccosh(y0) / |y_{1:d}| of log_o, guarded at the origin."""
    small = n < SMALL_NORM
    near = y0 < LOG_BRANCH_Y0
    safe_n = np.where(small, 1, n)
    near_origin = np.arcsinh(n) / safe_n
    far = np.arccosh(np.maximum(y0, 1)) / safe_n
    return np.where(small, 1 - n**2 / 6, np.where(near, near_origin, far))


def project_hyperboloid(phi) -> np.ndarray:
    """pi(phi) = (sqrt(1 + |phi|^2), phi)."""
    phi = as_working_precision(phi)
    time = np.sqrt(1 + np.sum(phi**2, axis=-1, keepdims=True))
    return np.concatenate([time, phi], axis=-1)


def parallel_transport(x, y, v, tol: float | None = None) -> np.ndarray:
    """Transport `v`, tangent at `x`, to the tangent space at `y` along the geodesic."""
    x = as_working_precision(x)
    y = as_working_precision(y)
    v = as_working_precision(v)
    check_on_manifold(x, tol)
    check_on_manifold(y, tol)
    if is_checked():
        tangency = np.abs(lorentz_inner(x, v))
        limit = (default_drift_tol(v) if tol is None else tol) * (
            1 + np.linalg.norm(v, axis=-1)
        )
        if np.any(tangency > limit):
            raise ManifoldDomainError(
                f"v is not tangent at x: |<x,v>_L| = {float(np.max(tangency)):.3e}."
            )
    denominator = 1 - lorentz_inner(x, y)
    if np.any(np.abs(denominator) < active_eps()):
        raise ManifoldDomainError(
            "Parallel transport between antipodal points is undefined."
        )
    coef = lorentz_inner(y, v) / denominator
    return v + coef[..., None] * (x + y)


def clip_tangent_norm(v, r: float) -> np.ndarray:
    """Rescale `v` to norm `r` when it is longer, direction preserved."""
    if r <= 0:
        raise ManifoldDomainError(f"The clipping radius must be positive, got {r}.")
    v = as_working_precision(v)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    factor = np.minimum(1, r / np.maximum(norm, np.finfo(v.dtype).tiny))
    return v * factor


def manifold_drift(points) -> float:
    """Mean |<x,x>_L + 1| over a batch of points; a detached diagnostic."""
    points = as_working_precision(points)
    if points.size == 0:
        return 0.0
    return float(np.mean(np.abs(lorentz_inner(points, points) + 1)))


def drift_bound(d: int, r: float, machine_eps: float = FP32_MACHINE_EPS) -> float:
    """Worst-case drift d * eps_m * cosh(r)^2 of exp_o on tangents of norm <= r."""
    return d * machine_eps * np.cosh(r) ** 2


def pairwise_sqdist_expanded(a, b) -> np.ndarray:
    """|a_i|^2 + |b_j|^2 - 2<a_i, b_j>, clamped at 0.

    Shapes are [..., N, d] and [..., M, d].
    """
    a = as_working_precision(a)
    b = as_working_precision(b)
    if a.shape[-1] != b.shape[-1]:
        raise ShapeMismatchError(
            f"Feature dimensions differ: {a.shape[-1]} and {b.shape[-1]}."
        )
    a_sq = np.sum(a**2, axis=-1)[..., :, None]
    b_sq = np.sum(b**2, axis=-1)[..., None, :]
    cross = a @ np.swapaxes(b, -1, -2)
    return np.maximum(a_sq + b_sq - 2 * cross, 0)
