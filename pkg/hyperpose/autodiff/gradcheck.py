from __future__ import annotations

import dataclasses
from typing import Callable, Sequence

import numpy as np

from hyperpose.autodiff.tensor import Tape, Tensor
from hyperpose.hyperpose_exceptions import NonFiniteError


@dataclasses.dataclass
class ParameterCheck:
    name: str
    checked_entries: int
    max_rel_error: float
    worst_index: tuple[int, ...] | None


@dataclasses.dataclass
class GradcheckReport:
    """
    Outcome of a finite-difference check.

    ``failure`` names the op (or tensor) that produced a non-finite value when
    the check could not complete.
    """

    tol: float
    h: float
    parameters: list[ParameterCheck]
    failure: str | None = None

    @property
    def max_rel_error(self) -> float:
        if not self.parameters:
            return 0.0
        return max(p.max_rel_error for p in self.parameters)

    @property
    def passed(self) -> bool:
        return self.failure is None and self.max_rel_error <= self.tol

    def worst(self) -> ParameterCheck | None:
        if not self.parameters:
            return None
        return max(self.parameters, key=lambda p: p.max_rel_error)

    def to_rows(self) -> list[dict]:
        return [dataclasses.asdict(p) for p in self.parameters]


def relative_error(g_ad: np.ndarray, g_fd: np.ndarray) -> np.ndarray:
    return np.abs(g_ad - g_fd) / np.maximum(1.0, np.abs(g_fd))


def gradcheck(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-4,
    tol: float = 1e-4,
    max_entries: int | None = None,
    seed: int = 0,
) -> GradcheckReport:
    """
    Compare tape gradients of the scalar ``f()`` to central differences.

    Parameters
    ----------
    f: Callable[[], Tensor]
        Evaluates the scalar from the current values of ``params``.
    params: Sequence[Tensor]
        Leaf tensors to check; their ``data`` is perturbed in place and
        restored.
    h: float
        Finite-difference step.
    tol: float
        Pass threshold on |g_ad - g_fd| / max(1, |g_fd|).
    max_entries: int | None
        When set, only this many randomly chosen entries of each parameter are
        checked.
    seed: int
        Seed of the entry selection.
    """
    rng = np.random.default_rng(seed)
    for p in params:
        p.data = np.ascontiguousarray(p.data)
        p.zero_grad()
    try:
        with Tape() as tape:
            loss = f()
        tape.backward(loss)
    except NonFiniteError as e:
        return GradcheckReport(tol, h, [], failure=e.tensor_name or e.msg)
    analytic = [p.grad_or_zeros().copy() for p in params]

    checks = []
    for index, (p, grad) in enumerate(zip(params, analytic)):
        entries = np.arange(p.size)
        if max_entries is not None and p.size > max_entries:
            entries = np.sort(rng.choice(p.size, size=max_entries, replace=False))
        numeric = np.empty(len(entries))
        flat = p.data.reshape(-1)
        for i, entry in enumerate(entries):
            original = flat[entry]
            flat[entry] = original + h
            upper = f().item()
            flat[entry] = original - h
            lower = f().item()
            flat[entry] = original
            if not (np.isfinite(upper) and np.isfinite(lower)):
                name = p.name or f"param[{index}]"
                return GradcheckReport(tol, h, checks, failure=name)
            numeric[i] = (upper - lower) / (2 * h)
        errors = relative_error(grad.reshape(-1)[entries], numeric)
        worst = int(np.argmax(errors)) if len(errors) else None
        checks.append(
            ParameterCheck(
                name=p.name or f"param[{index}]",
                checked_entries=len(entries),
                max_rel_error=float(errors[worst]) if worst is not None else 0.0,
                worst_index=(
                    tuple(int(i) for i in np.unravel_index(entries[worst], p.shape))
                    if worst is not None
                    else None
                ),
            )
        )
    return GradcheckReport(tol, h, checks)
