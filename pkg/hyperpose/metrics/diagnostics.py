"""
Embedding diagnostics, under the local definition ``hyperpose-local-v1``.

distortion_ratio
    For every frame, the ratios d_L(e_i, e_j) / hops(i, j) over all joint
    pairs; the frame's distortion is max ratio / min ratio (1 for a perfectly
    tree-metric embedding up to scale). Reported as the mean over frames.
map_retrieval
    Every embedding queries all the others, ranked by geodesic distance
    (stable on ties); a hit is an embedding with the same label. Mean average
    precision in percent over queries with at least one hit.

These numbers are not comparable with diagnostics defined elsewhere.
"""
from __future__ import annotations

import numpy as np

from hyperpose.geometry import lorentz_core
from hyperpose.hyperpose_exceptions import ShapeMismatchError
from hyperpose.kinematics.skeleton import Skeleton


def pairwise_geodesic(points: np.ndarray) -> np.ndarray:
    """[..., N, d+1] Lorentz points -> [..., N, N] geodesic distances."""
    points = np.asarray(points, dtype=np.float64)
    return lorentz_core.geodesic_distance(
        points[..., :, None, :], points[..., None, :, :]
    )


def distortion_ratio(embeddings, skeleton: Skeleton) -> float:
    """
    Parameters
    ----------
    embeddings: array [..., J, d+1]
        Lorentz points of every joint, one [J, d+1] slice per frame.
    skeleton: Skeleton
    """
    points = np.asarray(embeddings, dtype=np.float64)
    joints = skeleton.num_joints
    if points.ndim < 2 or points.shape[-2] != joints:
        raise ShapeMismatchError(
            f"Expected [..., {joints}, d+1] embeddings, got {points.shape}."
        )
    frames = points.reshape(-1, joints, points.shape[-1])
    rows, cols = np.triu_indices(joints, k=1)
    hops = skeleton.hop_distances[rows, cols]
    ratios = pairwise_geodesic(frames)[:, rows, cols] / hops
    low = np.min(ratios, axis=1)
    high = np.max(ratios, axis=1)
    spread = np.where(low > 0, high / np.where(low > 0, low, 1), np.inf)
    return float(np.mean(spread))


def map_retrieval(embeddings, labels) -> float:
    """Mean average precision (%) of same-label retrieval by geodesic distance."""
    points = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels)
    if points.ndim != 2 or len(labels) != len(points):
        raise ShapeMismatchError(
            f"Expected [N, d+1] embeddings and N labels, got {points.shape} and"
            f" {labels.shape}."
        )
    distances = pairwise_geodesic(points)
    precisions = []
    for query in range(len(points)):
        others = np.delete(np.arange(len(points)), query)
        order = others[np.argsort(distances[query, others], kind="stable")]
        hits = labels[order] == labels[query]
        if not np.any(hits):
            continue
        ranks = np.flatnonzero(hits) + 1
        precisions.append(np.mean(np.arange(1, len(ranks) + 1) / ranks))
    if not precisions:
        return float("nan")
    return float(100 * np.mean(precisions))
