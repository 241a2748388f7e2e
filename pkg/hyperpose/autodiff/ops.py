"""
Differentiable op set of the network.

Every op takes tensors (or constants, wrapped on the fly), computes its value
with numpy and, when recorded, returns the vector-Jacobian product of its
inputs from the output gradient.

Binary elementwise ops broadcast one operand onto the shape of the other
(leading batch dimensions and size-1 axes of the smaller operand); anything
else raises :class:`ShapeMismatchError` and needs an explicit
:func:`broadcast_to` or :func:`reshape`.
"""
from __future__ import annotations

import builtins
from typing import Sequence

import numpy as np

from hyperpose.autodiff.tensor import Tensor, as_tensor, make_result
from hyperpose.hyperpose_exceptions import ShapeMismatchError
from hyperpose.models.constants import EPS, GELU_COEF

SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)
LAYER_NORM_EPS = 1e-5


def _binary_shape(op: str, a: Tensor, b: Tensor) -> tuple[int, ...]:
    try:
        shape = np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeMismatchError(
            f"{op}: shapes {a.shape} and {b.shape} are incompatible.", e
        )
    if shape != a.shape and shape != b.shape:
        raise ShapeMismatchError(
            f"{op}: shapes {a.shape} and {b.shape} only broadcast to {shape};"
            " use broadcast_to explicitly."
        )
    return shape


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum `grad` back onto `shape`, undoing a one-sided broadcast."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _pair(a, b) -> tuple[Tensor, Tensor]:
    if isinstance(a, Tensor):
        return a, as_tensor(b, like=a)
    b = as_tensor(b)
    return as_tensor(a, like=b), b


# -- arithmetic


def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    _binary_shape("add", a, b)
    return make_result(
        "add",
        a.data + b.data,
        (a, b),
        lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)),
    )


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    _binary_shape("sub", a, b)
    return make_result(
        "sub",
        a.data - b.data,
        (a, b),
        lambda g: (unbroadcast(g, a.shape), -unbroadcast(g, b.shape)),
    )


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    _binary_shape("mul", a, b)
    return make_result(
        "mul",
        a.data * b.data,
        (a, b),
        lambda g: (unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)),
    )


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    _binary_shape("div", a, b)
    out = a.data / b.data
    return make_result(
        "div",
        out,
        (a, b),
        lambda g: (
            unbroadcast(g / b.data, a.shape),
            unbroadcast(-g * out / b.data, b.shape),
        ),
    )


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiplication by a python scalar."""
    factor = a.dtype.type(factor)
    return make_result("scale", a.data * factor, (a,), lambda g: (g * factor,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, batched over the leading ones."""
    a, b = _pair(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeMismatchError(
            f"matmul needs operands of rank >= 2, got {a.shape} and {b.shape}."
        )
    if a.shape[-1] != b.shape[-2]:
        raise ShapeMismatchError(
            f"matmul inner dimensions differ: {a.shape} @ {b.shape}."
        )
    batch = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    if batch != a.shape[:-2] and batch != b.shape[:-2]:
        raise ShapeMismatchError(
            f"matmul batch dimensions {a.shape[:-2]} and {b.shape[:-2]} need an"
            " explicit broadcast."
        )

    def vjp(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)

    return make_result("matmul", a.data @ b.data, (a, b), vjp)


# -- reductions and layout


def _normalize_axes(axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    axes = _normalize_axes(axis, a.ndim)

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape),)

    return make_result("sum", np.sum(a.data, axis=axes, keepdims=keepdims), (a,), vjp)


def mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axes(axis, a.ndim)
    count = int(np.prod([a.shape[i] for i in axes])) if axes else 1
    return scale(sum(a, axis=axes, keepdims=keepdims), 1.0 / builtins.max(count, 1))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    return make_result(
        "reshape", a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),)
    )


def transpose(a: Tensor, axes: Sequence[int] | None = None) -> Tensor:
    axes = tuple(range(a.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return make_result(
        "transpose",
        np.transpose(a.data, axes),
        (a,),
        lambda g: (np.transpose(g, inverse),),
    )


def swapaxes(a: Tensor, axis1: int, axis2: int) -> Tensor:
    axes = list(range(a.ndim))
    axes[axis1], axes[axis2] = axes[axis2], axes[axis1]
    return transpose(a, axes)


def broadcast_to(a: Tensor, shape: Sequence[int]) -> Tensor:
    shape = tuple(shape)
    return make_result(
        "broadcast_to",
        np.broadcast_to(a.data, shape),
        (a,),
        lambda g: (unbroadcast(g, a.shape),),
    )


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]
    return make_result(
        "concat",
        np.concatenate([t.data for t in tensors], axis=axis),
        tuple(tensors),
        lambda g: tuple(np.split(g, bounds, axis=axis)),
    )


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = np.stack([t.data for t in tensors], axis=axis)
    axis = axis % out.ndim
    return make_result(
        "stack",
        out,
        tuple(tensors),
        lambda g: tuple(np.take(g, i, axis=axis) for i in range(len(tensors))),
    )


def split(a: Tensor, sizes: Sequence[int], axis: int = -1) -> list[Tensor]:
    axis = axis % a.ndim
    if builtins.sum(sizes) != a.shape[axis]:
        raise ShapeMismatchError(
            f"split sizes {list(sizes)} do not add up to {a.shape[axis]}."
        )
    parts, start = [], 0
    for size in sizes:
        index = [slice(None)] * a.ndim
        index[axis] = slice(start, start + size)
        parts.append(getitem(a, tuple(index)))
        start += size
    return parts


def _is_basic_index(index) -> bool:
    items = index if isinstance(index, tuple) else (index,)
    return all(
        isinstance(i, (int, np.integer, slice)) or i is None or i is Ellipsis
        for i in items
    )


def getitem(a: Tensor, index) -> Tensor:
    basic = _is_basic_index(index)

    def vjp(g):
        grad = np.zeros_like(a.data)
        if basic:
            grad[index] += g
        else:
            np.add.at(grad, index, g)
        return (grad,)

    return make_result("getitem", a.data[index], (a,), vjp)


def take(a: Tensor, indices: np.ndarray, axis: int) -> Tensor:
    """Gather along `axis`; repeated indices accumulate their gradients."""
    indices = np.asarray(indices, dtype=np.intp)
    axis = axis % a.ndim

    def vjp(g):
        grad = np.zeros_like(a.data)
        grad_front = np.moveaxis(grad, axis, 0)
        idx_axes = list(range(axis, axis + indices.ndim))
        g_front = np.moveaxis(g, idx_axes, list(range(indices.ndim)))
        np.add.at(grad_front, indices, g_front)
        return (grad,)

    return make_result("take", np.take(a.data, indices, axis=axis), (a,), vjp)


def band_extract(a: Tensor, window: int, axis: int) -> tuple[Tensor, np.ndarray]:
    """
    Gather, for each position t along `axis`, the 2W+1 neighbours t-W..t+W.

    Out-of-range neighbours are clipped to the sequence ends; the returned
    boolean mask of shape [T, 2W+1] is False on them so that callers can
    exclude them from a softmax.
    """
    frames = a.shape[axis]
    offsets = np.arange(-window, window + 1)
    positions = np.arange(frames)[:, None] + offsets[None, :]
    valid = (positions >= 0) & (positions < frames)
    return take(a, np.clip(positions, 0, frames - 1), axis), valid


# -- elementwise


def _unary(op: str, a: Tensor, value: np.ndarray, derivative) -> Tensor:
    return make_result(op, value, (a,), lambda g: (g * derivative(),))


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)
    return _unary("tanh", a, out, lambda: 1 - out**2)


def cosh(a: Tensor) -> Tensor:
    return _unary("cosh", a, np.cosh(a.data), lambda: np.sinh(a.data))


def sinh(a: Tensor) -> Tensor:
    return _unary("sinh", a, np.sinh(a.data), lambda: np.cosh(a.data))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _unary("exp", a, out, lambda: out)


def log(a: Tensor) -> Tensor:
    return _unary("log", a, np.log(a.data), lambda: 1 / a.data)


def sqrt(a: Tensor) -> Tensor:
    out = np.sqrt(a.data)
    return _unary("sqrt", a, out, lambda: 0.5 / out)


def square(a: Tensor) -> Tensor:
    return _unary("square", a, a.data**2, lambda: 2 * a.data)


def absolute(a: Tensor) -> Tensor:
    return _unary("abs", a, np.abs(a.data), lambda: np.sign(a.data))


def softplus(a: Tensor) -> Tensor:
    out = np.logaddexp(0, a.data)
    return _unary("softplus", a, out, lambda: 1 / (1 + np.exp(-a.data)))


def arccosh(a: Tensor, eps: float = EPS) -> Tensor:
    """
    arccosh of the argument clamped to >= 1.

    The derivative 1/sqrt(z^2 - 1) is evaluated at max(z, 1 + eps) everywhere,
    including on the clamped region.
    """
    z = np.maximum(a.data, 1)
    zc = np.maximum(a.data, 1 + eps)
    return _unary("arccosh", a, np.arccosh(z), lambda: 1 / np.sqrt(zc**2 - 1))


def clamp_min(a: Tensor, low: float) -> Tensor:
    mask = a.data > low
    return _unary("clamp_min", a, np.maximum(a.data, low), lambda: mask)


def gelu(a: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    x = a.data
    t = np.tanh(SQRT_2_OVER_PI * (x + GELU_COEF * x**3))

    def derivative():
        dt = (1 - t**2) * SQRT_2_OVER_PI * (1 + 3 * GELU_COEF * x**2)
        return 0.5 * (1 + t) + 0.5 * x * dt

    return _unary("gelu", a, 0.5 * x * (1 + t), derivative)


def vector_norm(a: Tensor, axis: int = -1, keepdims: bool = False) -> Tensor:
    """Euclidean norm along `axis`, with the zero subgradient at 0."""
    norm = np.sqrt(np.sum(a.data**2, axis=axis, keepdims=True))

    def vjp(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        safe = np.where(norm > 0, norm, 1)
        return (np.where(norm > 0, g * a.data / safe, 0),)

    out = norm if keepdims else np.squeeze(norm, axis=axis)
    return make_result("vector_norm", out, (a,), vjp)


# -- normalisation and attention helpers


def softmax(a: Tensor, mask: np.ndarray | None = None) -> Tensor:
    """
    Softmax over the last axis, max-subtracted.

    `mask` is an additive constant broadcast onto `a`, 0 on kept logits and
    -inf on excluded ones; every row must keep at least one logit.
    """
    logits = a.data if mask is None else a.data + mask
    shifted = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(shifted)
    out = e / np.sum(e, axis=-1, keepdims=True)

    def vjp(g):
        return (out * (g - np.sum(g * out, axis=-1, keepdims=True)),)

    return make_result("softmax", out, (a,), vjp)


def layer_norm(
    x: Tensor, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS
) -> Tensor:
    """Normalise the last axis to zero mean and unit variance, then scale and shift."""
    if gamma.shape != (x.shape[-1],) or beta.shape != (x.shape[-1],):
        raise ShapeMismatchError(
            f"layer_norm parameters must have shape ({x.shape[-1]},), got"
            f" {gamma.shape} and {beta.shape}."
        )
    mu = np.mean(x.data, axis=-1, keepdims=True)
    centred = x.data - mu
    inv_std = 1 / np.sqrt(np.mean(centred**2, axis=-1, keepdims=True) + eps)
    x_hat = centred * inv_std

    def vjp(g):
        g_hat = g * gamma.data
        gx = inv_std * (
            g_hat
            - np.mean(g_hat, axis=-1, keepdims=True)
            - x_hat * np.mean(g_hat * x_hat, axis=-1, keepdims=True)
        )
        leading = tuple(range(x.ndim - 1))
        return gx, np.sum(g * x_hat, axis=leading), np.sum(g, axis=leading)

    return make_result(
        "layer_norm", x_hat * gamma.data + beta.data, (x, gamma, beta), vjp
    )


def clip_norm(v: Tensor, radius: float) -> Tensor:
    """Differentiable clip_tangent_norm along the last axis."""
    norm = np.sqrt(np.sum(v.data**2, axis=-1, keepdims=True))
    over = norm > radius
    safe = np.where(over, norm, 1)
    factor = np.where(over, radius / safe, 1)

    def vjp(g):
        unit = v.data / safe
        radial = np.sum(unit * g, axis=-1, keepdims=True)
        return (np.where(over, factor * (g - unit * radial), g),)

    return make_result("clip_norm", v.data * factor, (v,), vjp)


def dropout(a: Tensor, rate: float, rng: np.random.Generator, training: bool) -> Tensor:
    """Inverted dropout; the identity when not training or at rate 0."""
    if not training or rate <= 0:
        return a
    keep = (rng.random(a.shape) >= rate).astype(a.dtype) / a.dtype.type(1 - rate)
    return mul(a, Tensor(keep))
