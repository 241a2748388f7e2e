"""
Dense tensors and the tape that records operations on them.

A :class:`Tape` is made current with a ``with`` block. While it is current,
every op whose inputs require a gradient appends one node to it; outside any
tape ops only compute values, which is how inference and finite-difference
evaluations run. :meth:`Tape.backward` walks the nodes in exact reverse
recording order, accumulates gradients into leaf tensors and frees the tape.
"""
from __future__ import annotations

import contextvars
import dataclasses
from typing import Callable, Sequence

import numpy as np

from hyperpose.hyperpose_exceptions import (
    InvalidHyperposeArgumentError,
    NonFiniteError,
    ShapeMismatchError,
)

_ACTIVE_TAPE: contextvars.ContextVar[Tape | None] = contextvars.ContextVar(
    "hyperpose_active_tape", default=None
)


class Tensor:
    """A row-major float array with an optional gradient.

    Tensors produced by an op recorded on a tape are intermediates; every
    other tensor is a leaf and receives its gradient in ``grad``.
    """

    # numpy defers mixed `ndarray <op> Tensor` expressions to Tensor
    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        data = np.asarray(data)
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float64)
        self.data: np.ndarray = data
        self.requires_grad = requires_grad
        self.name = name
        self.grad: np.ndarray | None = None
        self._node: Node | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def zero_grad(self) -> None:
        self.grad = None

    def grad_or_zeros(self) -> np.ndarray:
        return np.zeros_like(self.data) if self.grad is None else self.grad

    def detach(self) -> Tensor:
        return Tensor(self.data.copy(), name=self.name)

    def __repr__(self):
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{label})"

    # Operators are thin aliases of hyperpose.autodiff.ops.
    def __add__(self, other):
        from hyperpose.autodiff import ops

        return ops.add(self, other)

    def __radd__(self, other):
        from hyperpose.autodiff import ops

        return ops.add(other, self)

    def __sub__(self, other):
        from hyperpose.autodiff import ops

        return ops.sub(self, other)

    def __rsub__(self, other):
        from hyperpose.autodiff import ops

        return ops.sub(other, self)

    def __mul__(self, other):
        from hyperpose.autodiff import ops

        if isinstance(other, (int, float)):
            return ops.scale(self, other)
        return ops.mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        from hyperpose.autodiff import ops

        if isinstance(other, (int, float)):
            return ops.scale(self, 1.0 / other)
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from hyperpose.autodiff import ops

        return ops.div(other, self)

    def __neg__(self):
        from hyperpose.autodiff import ops

        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from hyperpose.autodiff import ops

        return ops.matmul(self, other)

    def __getitem__(self, index):
        from hyperpose.autodiff import ops

        return ops.getitem(self, index)

    def sum(self, axis=None, keepdims: bool = False) -> Tensor:
        from hyperpose.autodiff import ops

        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> Tensor:
        from hyperpose.autodiff import ops

        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape) -> Tensor:
        from hyperpose.autodiff import ops

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes) -> Tensor:
        from hyperpose.autodiff import ops

        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes or None)

    def swapaxes(self, axis1: int, axis2: int) -> Tensor:
        from hyperpose.autodiff import ops

        return ops.swapaxes(self, axis1, axis2)


def as_tensor(value, like: Tensor | None = None) -> Tensor:
    """Wrap constants as non-differentiable tensors, in the dtype of `like`."""
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype))


@dataclasses.dataclass(eq=False)
class Node:
    """One recorded op; its saved activations live in the `vjp` closure."""

    op: str
    output: Tensor
    inputs: tuple[Tensor, ...]
    vjp: Callable[[np.ndarray], Sequence[np.ndarray | None]]


class Tape:
    """
    Ordered record of the ops of one forward pass.

    Parameters
    ----------
    check_finite: bool
        Raise :class:`NonFiniteError`, naming the op, as soon as a recorded
        output or a back-propagated gradient holds a NaN or an infinity.
    """

    def __init__(self, check_finite: bool = True):
        self.check_finite = check_finite
        self.nodes: list[Node] = []
        self._token = None

    def __enter__(self) -> Tape:
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _ACTIVE_TAPE.reset(self._token)
        self._token = None
        if exc_type is not None:
            self.free()

    def __len__(self):
        return len(self.nodes)

    @staticmethod
    def current() -> Tape | None:
        return _ACTIVE_TAPE.get()

    def record(self, op: str, output: Tensor, inputs: tuple[Tensor, ...], vjp) -> None:
        if self.check_finite and not np.all(np.isfinite(output.data)):
            raise NonFiniteError(f"Non-finite output of op '{op}'.", tensor_name=op)
        node = Node(op, output, inputs, vjp)
        output._node = node
        self.nodes.append(node)

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into the ``grad`` of every leaf reached."""
        if loss.size != 1:
            raise ShapeMismatchError(
                f"backward needs a scalar loss, got shape {loss.shape}."
            )
        if loss._node is None:
            raise InvalidHyperposeArgumentError(
                "The loss was not recorded on this tape."
            )
        pending = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self.nodes):
            grad = pending.pop(id(node.output), None)
            if grad is None:
                continue
            for tensor, tensor_grad in zip(node.inputs, node.vjp(grad)):
                if tensor_grad is None or not tensor.requires_grad:
                    continue
                if tensor_grad.shape != tensor.shape:
                    raise ShapeMismatchError(
                        f"Op '{node.op}' produced a gradient of shape"
                        f" {tensor_grad.shape} for an input of shape {tensor.shape}."
                    )
                if self.check_finite and not np.all(np.isfinite(tensor_grad)):
                    raise NonFiniteError(
                        f"Non-finite gradient flowing out of op '{node.op}'.",
                        tensor_name=tensor.name or node.op,
                    )
                if tensor.is_leaf:
                    tensor.grad = (
                        np.array(tensor_grad, copy=True)
                        if tensor.grad is None
                        else tensor.grad + tensor_grad
                    )
                else:
                    key = id(tensor)
                    if key in pending:
                        tensor_grad = pending[key] + tensor_grad
                    pending[key] = tensor_grad
        self.free()

    def free(self) -> None:
        for node in self.nodes:
            node.output._node = None
        self.nodes.clear()


def make_result(op: str, data: np.ndarray, inputs: tuple[Tensor, ...], vjp) -> Tensor:
    """Wrap an op output, recording it on the current tape if it needs a gradient."""
    out = Tensor(data)
    tape = Tape.current()
    if tape is not None and any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.record(op, out, inputs, vjp)
    return out
