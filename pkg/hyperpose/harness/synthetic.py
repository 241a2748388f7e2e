"""
Synthetic kinematic-tree motion.

A generator draws per-joint local rotations (Euler angles, radians) for every
frame; forward kinematics turns them into pelvis-centred 3D joints (mm), and
an orthographic camera projects those onto normalised image coordinates.
"""
from __future__ import annotations

import numpy as np
import xarray as xr

from hyperpose.harness import dataset_io
from hyperpose.hyperpose_exceptions import SkeletonFormatError
from hyperpose.kinematics.skeleton import Skeleton, load_skeleton
from hyperpose.models.synthetic_spec import MotionGeneratorRegistry, SyntheticSpec

# occluded joints keep a confidence below this
OCCLUDED_CONFIDENCE = 0.1


def euler_to_matrix(angles: np.ndarray) -> np.ndarray:
    """[..., 3] (x, y, z) angles -> [..., 3, 3] rotations Rz @ Ry @ Rx."""
    cx, cy, cz = (np.cos(angles[..., i]) for i in range(3))
    sx, sy, sz = (np.sin(angles[..., i]) for i in range(3))
    one, zero = np.ones_like(cx), np.zeros_like(cx)
    rx = np.stack([one, zero, zero, zero, cx, -sx, zero, sx, cx], axis=-1)
    ry = np.stack([cy, zero, sy, zero, one, zero, -sy, zero, cy], axis=-1)
    rz = np.stack([cz, -sz, zero, sz, cz, zero, zero, zero, one], axis=-1)
    shape = angles.shape[:-1] + (3, 3)
    return rz.reshape(shape) @ ry.reshape(shape) @ rx.reshape(shape)


def forward_kinematics(skeleton: Skeleton, angles: np.ndarray) -> np.ndarray:
    """
    Joint positions [T, J, 3] from local rotations [T, J, 3].

    A joint sits at its parent plus its rest offset rotated by the parent's
    global rotation; the root stays at the origin.
    """
    if skeleton.offsets is None:
        raise SkeletonFormatError(
            "Forward kinematics needs a skeleton with rest offsets."
        )
    local = euler_to_matrix(angles)
    frames, joints = angles.shape[:2]
    rotation = np.zeros((frames, joints, 3, 3))
    position = np.zeros((frames, joints, 3))
    for j in skeleton.depth_order():
        parent = skeleton.parents[j]
        if parent < 0:
            rotation[:, j] = local[:, j]
            continue
        position[:, j] = position[:, parent] + np.einsum(
            "tab,b->ta", rotation[:, parent], skeleton.offsets[j]
        )
        rotation[:, j] = rotation[:, parent] @ local[:, j]
    return position


def generate_static(spec: SyntheticSpec, skeleton: Skeleton, rng) -> np.ndarray:
    pose = rng.uniform(-1, 1, size=(skeleton.num_joints, 3)) * spec.amplitude * 0.3
    return np.broadcast_to(pose, (spec.frames, skeleton.num_joints, 3)).copy()


def generate_gait_sine(spec: SyntheticSpec, skeleton: Skeleton, rng) -> np.ndarray:
    """
    Every angle is a sine of period ``spec.period``.

    Mirrored joints share an amplitude and swing in antiphase.
    """
    joints = skeleton.num_joints
    amplitude = spec.amplitude * rng.uniform(0.3, 1.0, size=(joints, 3))
    amplitude[:, 1:] *= 0.3
    phase = rng.uniform(0, 2 * np.pi, size=(joints, 3))
    for j, m in enumerate(skeleton.mirror):
        if j < m:
            amplitude[m] = amplitude[j]
            phase[m] = phase[j] + np.pi
    t = np.arange(spec.frames)[:, None, None]
    return amplitude * np.sin(2 * np.pi * t / spec.period + phase)


def catmull_rom(keys: np.ndarray, frames: int) -> np.ndarray:
    """Cubic interpolation through `keys` [K, ...] spread evenly over `frames`."""
    count = len(keys)
    padded = np.concatenate([keys[:1], keys, keys[-1:]])
    position = np.linspace(0, count - 1, frames)
    segment = np.minimum(position.astype(int), count - 2)
    u = (position - segment).reshape((-1,) + (1,) * (keys.ndim - 1))
    p0, p1, p2, p3 = (padded[segment + k] for k in range(4))
    return 0.5 * (
        2 * p1
        + (p2 - p0) * u
        + (2 * p0 - 5 * p1 + 4 * p2 - p3) * u**2
        + (3 * p1 - p0 - 3 * p2 + p3) * u**3
    )


def generate_random_smooth_spline(
    spec: SyntheticSpec, skeleton: Skeleton, rng
) -> np.ndarray:
    keys = rng.uniform(-1, 1, size=(spec.keyframes, skeleton.num_joints, 3))
    keys *= spec.amplitude
    keys[..., 1:] *= 0.3
    return catmull_rom(keys, spec.frames)


def project(points: np.ndarray, scale: float) -> np.ndarray:
    """Orthographic projection on the (x, y) image plane, y up."""
    return points[..., :2] * scale


def occlusion_confidence(spec: SyntheticSpec, joints: int, rng) -> np.ndarray:
    """[T, J] confidences, 1 except inside occlusion episodes."""
    confidence = np.ones((spec.frames, joints))
    episodes = rng.poisson(spec.occlusion_rate, size=joints)
    for j in range(joints):
        for _ in range(episodes[j]):
            length = int(min(spec.frames, rng.geometric(1 / spec.occlusion_length)))
            start = int(rng.integers(0, spec.frames - length + 1))
            confidence[start : start + length, j] = rng.uniform(
                0, OCCLUDED_CONFIDENCE, size=length
            )
    return confidence


def synthesize(spec: SyntheticSpec) -> xr.Dataset:
    """Deterministic dataset of ``spec.sequences`` sequences, see :mod:`dataset_io`."""
    skeleton = load_skeleton(spec.skeleton)
    generator = MotionGeneratorRegistry.lookup(spec.generator).function
    rng = np.random.default_rng(spec.seed)
    inputs, targets = [], []
    for _ in range(spec.sequences):
        joints3d = forward_kinematics(skeleton, generator(spec, skeleton, rng))
        keypoints = project(joints3d, spec.projection_scale)
        if spec.projection_noise > 0:
            noise = rng.normal(0, spec.projection_noise, keypoints.shape)
            keypoints = keypoints + noise
        if spec.occlusion_rate > 0:
            confidence = occlusion_confidence(spec, skeleton.num_joints, rng)
        else:
            confidence = np.ones(keypoints.shape[:-1])
        inputs.append(np.concatenate([keypoints, confidence[..., None]], axis=-1))
        targets.append(joints3d)
    return dataset_io.make_dataset(
        np.stack(inputs),
        np.stack(targets),
        spec=spec.to_dict(),
        skeleton=skeleton.to_document(),
    )
