"""
Pose error metrics on numpy arrays of shape [..., T, J, 3] (mm).

Every metric averages over all leading axes; per-frame alignment (P-MPJPE,
N-MPJPE) treats every [J, 3] slice as one frame.
"""
from __future__ import annotations

import dataclasses
import warnings

import numpy as np

from hyperpose.hyperpose_exceptions import (
    InvalidHyperposeArgumentError,
    ShapeMismatchError,
)
from hyperpose.kinematics.skeleton import Skeleton

# centred clouds with a smaller Frobenius norm are treated as a single point
DEGENERATE_NORM = 1e-12


class DegenerateAlignmentWarning(UserWarning):
    """An alignment was skipped because a point cloud has no extent."""


def _check(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ShapeMismatchError(
            f"Prediction {pred.shape} and ground truth {gt.shape} differ."
        )
    if pred.ndim < 2 or pred.shape[-1] != 3:
        raise ShapeMismatchError(f"Expected [..., J, 3] joints, got {pred.shape}.")
    return pred, gt


def mpjpe(pred, gt) -> float:
    pred, gt = _check(pred, gt)
    return float(np.mean(np.linalg.norm(pred - gt, axis=-1)))


@dataclasses.dataclass
class ProcrustesAlignment:
    """
    Per-frame similarity transform ``scale * pred @ rotation + translation``.

    Attributes
    ----------
    aligned: np.ndarray
        The aligned prediction, [N, J, 3].
    rotation: np.ndarray
        [N, 3, 3] proper rotations, det +1.
    scale: np.ndarray
        [N] scale factors.
    translation: np.ndarray
        [N, 1, 3] translations.
    degenerate: np.ndarray
        [N] True where alignment was skipped and ``aligned`` is ``pred``.
    """

    aligned: np.ndarray
    rotation: np.ndarray
    scale: np.ndarray
    translation: np.ndarray
    degenerate: np.ndarray


def procrustes_align(pred, gt) -> ProcrustesAlignment:
    """Optimal rotation, translation and scale of every pred frame onto gt."""
    pred, gt = _check(pred, gt)
    joints = pred.shape[-2]
    y = pred.reshape(-1, joints, 3)
    x = gt.reshape(-1, joints, 3)
    mu_x = np.mean(x, axis=1, keepdims=True)
    mu_y = np.mean(y, axis=1, keepdims=True)
    x0 = x - mu_x
    y0 = y - mu_y
    norm_x = np.sqrt(np.sum(x0**2, axis=(1, 2), keepdims=True))
    norm_y = np.sqrt(np.sum(y0**2, axis=(1, 2), keepdims=True))
    degenerate = (norm_x[:, 0, 0] < DEGENERATE_NORM) | (
        norm_y[:, 0, 0] < DEGENERATE_NORM
    )
    x0 = x0 / np.where(degenerate[:, None, None], 1, norm_x)
    y0 = y0 / np.where(degenerate[:, None, None], 1, norm_y)

    u, s, vt = np.linalg.svd(np.swapaxes(x0, 1, 2) @ y0)
    v = np.swapaxes(vt, 1, 2)
    rotation = v @ np.swapaxes(u, 1, 2)
    # flip the weakest direction instead of returning a reflection
    sign = np.sign(np.linalg.det(rotation))
    sign = np.where(sign == 0, 1, sign)
    v[:, :, -1] *= sign[:, None]
    s[:, -1] *= sign
    rotation = v @ np.swapaxes(u, 1, 2)

    scale = np.sum(s, axis=1) * norm_x[:, 0, 0]
    scale = scale / np.where(degenerate, 1, norm_y[:, 0, 0])
    translation = mu_x - scale[:, None, None] * (mu_y @ rotation)
    aligned = scale[:, None, None] * (y @ rotation) + translation

    identity = np.broadcast_to(np.eye(3), rotation.shape)
    rotation = np.where(degenerate[:, None, None], identity, rotation)
    scale = np.where(degenerate, 1.0, scale)
    translation = np.where(degenerate[:, None, None], 0.0, translation)
    aligned = np.where(degenerate[:, None, None], y, aligned)
    if np.any(degenerate):
        warnings.warn(
            f"Procrustes alignment skipped on {int(degenerate.sum())} degenerate"
            " frame(s), plain MPJPE used there.",
            DegenerateAlignmentWarning,
            stacklevel=2,
        )
    return ProcrustesAlignment(aligned, rotation, scale, translation, degenerate)


def p_mpjpe(pred, gt) -> float:
    """MPJPE after per-frame similarity alignment of pred onto gt."""
    pred, gt = _check(pred, gt)
    aligned = procrustes_align(pred, gt).aligned
    return mpjpe(aligned, gt.reshape(aligned.shape))


def optimal_scale(pred, gt) -> tuple[np.ndarray, np.ndarray]:
    """Per-frame s* = <pred, gt> / <pred, pred> and the mask of zero-norm frames."""
    pred, gt = _check(pred, gt)
    joints = pred.shape[-2]
    y = pred.reshape(-1, joints * 3)
    x = gt.reshape(-1, joints * 3)
    power = np.sum(y * y, axis=1)
    degenerate = power < DEGENERATE_NORM**2
    ratio = np.sum(y * x, axis=1) / np.where(degenerate, 1, power)
    scale = np.where(degenerate, 1.0, ratio)
    return scale, degenerate


def n_mpjpe(pred, gt) -> float:
    """MPJPE after the least-squares scale of every pred frame."""
    pred, gt = _check(pred, gt)
    scale, degenerate = optimal_scale(pred, gt)
    if np.any(degenerate):
        warnings.warn(
            f"Scale normalisation skipped on {int(degenerate.sum())} zero-norm"
            " frame(s).",
            DegenerateAlignmentWarning,
            stacklevel=2,
        )
    joints = pred.shape[-2]
    scaled = scale[:, None, None] * pred.reshape(-1, joints, 3)
    return mpjpe(scaled, gt.reshape(scaled.shape))


def _temporal_difference(pred, gt, order: int, name: str) -> float:
    pred, gt = _check(pred, gt)
    if pred.ndim < 3 or pred.shape[-3] < order + 1:
        raise InvalidHyperposeArgumentError(
            f"{name} needs at least {order + 1} frames, got"
            f" {pred.shape[-3] if pred.ndim >= 3 else 1}."
        )
    diff = np.diff(pred, n=order, axis=-3) - np.diff(gt, n=order, axis=-3)
    return float(np.mean(np.linalg.norm(diff, axis=-1)))


def mpjve(pred, gt) -> float:
    """Mean velocity error, mm/frame."""
    return _temporal_difference(pred, gt, 1, "mpjve")


def accel_error(pred, gt) -> float:
    """Mean acceleration error, mm/frame^2."""
    return _temporal_difference(pred, gt, 2, "accel_error")


def blc(pred, gt, skeleton: Skeleton) -> float:
    """Mean absolute Euclidean bone-length deviation, mm."""
    pred, gt = _check(pred, gt)
    if pred.shape[-2] != skeleton.num_joints:
        raise ShapeMismatchError(
            f"The skeleton has {skeleton.num_joints} joints, the poses"
            f" {pred.shape[-2]}."
        )
    difference = skeleton.bone_lengths(pred) - skeleton.bone_lengths(gt)
    return float(np.mean(np.abs(difference)))
