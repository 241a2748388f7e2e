"""AdamW with decoupled weight decay and global gradient-norm clipping."""
from __future__ import annotations

import numpy as np

from hyperpose.hyperpose_exceptions import NonFiniteError
from hyperpose.network.parameters import ParameterStore


def clip_gradients(stores: list[ParameterStore], max_norm: float) -> float:
    """Rescale every gradient so that their global l2 norm is <= max_norm.

    Returns the norm before clipping.
    """
    grads = [p.grad for store in stores for p in store if p.grad is not None]
    total = float(np.sqrt(sum(float(np.sum(g.astype(np.float64) ** 2)) for g in grads)))
    if not np.isfinite(total):
        name = next(
            (
                p.name
                for store in stores
                for p in store
                if p.grad is not None and not np.all(np.isfinite(p.grad))
            ),
            None,
        )
        raise NonFiniteError("The gradient is not finite.", tensor_name=name)
    if total > max_norm:
        factor = max_norm / (total + 1e-12)
        for g in grads:
            g *= g.dtype.type(factor)
    return total


class AdamW:
    def __init__(
        self,
        stores: list[ParameterStore],
        lr: float,
        weight_decay: float,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.stores = stores
        self.lr = lr
        self.weight_decay = weight_decay
        self.betas = betas
        self.eps = eps
        self.step_count = 0
        self._moments: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def zero_grad(self) -> None:
        for store in self.stores:
            store.zero_grad()

    def step(self, lr: float | None = None) -> None:
        lr = self.lr if lr is None else lr
        beta1, beta2 = self.betas
        self.step_count += 1
        correction1 = 1 - beta1**self.step_count
        correction2 = 1 - beta2**self.step_count
        for store in self.stores:
            for name, p in store.items():
                if p.grad is None or not p.requires_grad:
                    continue
                zeros = np.zeros_like(p.data)
                m, v = self._moments.get(name, (zeros, zeros))
                m = beta1 * m + (1 - beta1) * p.grad
                v = beta2 * v + (1 - beta2) * p.grad**2
                self._moments[name] = (m, v)
                update = (m / correction1) / (np.sqrt(v / correction2) + self.eps)
                if store.is_decayed(name):
                    update = update + self.weight_decay * p.data
                p.data = (p.data - lr * update).astype(p.dtype, copy=False)
