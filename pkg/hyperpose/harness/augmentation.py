from __future__ import annotations

import numpy as np


def horizontal_flip(
    inputs: np.ndarray, targets: np.ndarray, mirror: tuple[int, ...]
) -> tuple[np.ndarray, np.ndarray]:
    """Negate x in 2D and 3D then swap left and right joints; an involution."""
    mirror = np.asarray(mirror, dtype=np.intp)
    inputs = inputs.copy()
    targets = targets.copy()
    inputs[..., 0] *= -1
    targets[..., 0] *= -1
    return inputs[..., mirror, :], targets[..., mirror, :]


def confidence_dropout(
    inputs: np.ndarray, p: float, rng: np.random.Generator
) -> np.ndarray:
    """With probability p per sample, zero the confidence of 1 or 2 distinct joints."""
    inputs = inputs.copy()
    joints = inputs.shape[-2]
    for b in range(inputs.shape[0]):
        if rng.random() >= p:
            continue
        count = min(int(rng.integers(1, 3)), joints)
        dropped = rng.choice(joints, size=count, replace=False)
        inputs[b, :, dropped, 2] = 0
    return inputs


def augment_batch(
    inputs: np.ndarray,
    targets: np.ndarray,
    mirror: tuple[int, ...],
    rng: np.random.Generator,
    hflip: bool = True,
    dropout_p: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Flip every sample with probability 1/2, then apply confidence dropout."""
    if hflip:
        flip = rng.random(inputs.shape[0]) < 0.5
        if np.any(flip):
            inputs, targets = inputs.copy(), targets.copy()
            flipped = horizontal_flip(inputs[flip], targets[flip], mirror)
            inputs[flip], targets[flip] = flipped
    if dropout_p > 0:
        inputs = confidence_dropout(inputs, dropout_p, rng)
    return inputs, targets
