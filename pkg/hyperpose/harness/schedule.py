from __future__ import annotations

import numpy as np


def learning_rate(
    epoch: float, peak: float, epochs: int, warmup_epochs: int, floor: float
) -> float:
    """
    Linear warmup from 0 to `peak` over `warmup_epochs`, then cosine decay to
    ``floor * peak`` at `epochs`. `epoch` is fractional, measured in epochs
    since the start of training.
    """
    if warmup_epochs > 0 and epoch < warmup_epochs:
        return peak * epoch / warmup_epochs
    lowest = floor * peak
    span = max(epochs - warmup_epochs, 1)
    progress = min(max((epoch - warmup_epochs) / span, 0.0), 1.0)
    return float(lowest + (peak - lowest) * 0.5 * (1 + np.cos(np.pi * progress)))
