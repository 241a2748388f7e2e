"""
Kinematic trees.

A skeleton is described by a JSON-shaped document::

    {"joints": [names...], "parents": [ints...], "root": int,
     "mirror": [[left, right], ...], "offsets": [[x, y, z], ...]}

``mirror`` (left/right joint pairs) and ``offsets`` (rest-pose bone vectors in
mm, used by the synthetic motion generator) are optional. Documents are read
with pyyaml, of which JSON is a subset.
"""
from __future__ import annotations

import dataclasses
import os
from importlib import resources
from typing import Any

import fsspec
import numpy as np
import yaml

from hyperpose.autodiff import ops
from hyperpose.autodiff.tensor import Tensor, as_tensor
from hyperpose.hyperpose_exceptions import SkeletonFormatError
from hyperpose.hyperpose_types import SkeletonLike
from hyperpose.models.constants import HOP_COUNT
from hyperpose.models.hop_convention import HopConventionRegistry
from hyperpose.models.registry import Registry


@dataclasses.dataclass
class SkeletonPreset:
    name: str
    filename: str

    def read(self) -> dict[str, Any]:
        text = (
            resources.files("hyperpose.kinematics")
            .joinpath("presets", self.filename)
            .read_text()
        )
        return yaml.safe_load(text)


class SkeletonPresetRegistry(Registry[SkeletonPreset]):
    _item_class = SkeletonPreset

    H36M_17 = SkeletonPreset("h36m_17", "h36m_17.json")
    TOY_5 = SkeletonPreset("toy_5", "toy_5.json")

    @staticmethod
    def get_item_aliases(item: SkeletonPreset) -> list[str]:
        return [item.name.upper(), item.name.upper().replace("_", "-")]


@dataclasses.dataclass(frozen=True, eq=False)
class Skeleton:
    """
    Validated kinematic tree with its cached k-hop adjacency matrices.

    Attributes
    ----------
    joint_names: tuple[str, ...]
    parents: tuple[int, ...]
        Parent of every joint, -1 for the root.
    root: int
    bones: tuple[tuple[int, int], ...]
        (child, parent) pairs in joint order, J - 1 of them.
    hop_distances: np.ndarray
        [J, J] shortest-path lengths in bones.
    adjacency_powers: np.ndarray
        [3, J, J] binary A^1..A^3 under ``hop_convention``, zero diagonal.
    mirror: tuple[int, ...]
        Index of the left/right counterpart of every joint, itself on the
        midline.
    offsets: np.ndarray | None
        [J, 3] rest-pose bone vectors in mm, the root row being zero.
    """

    joint_names: tuple[str, ...]
    parents: tuple[int, ...]
    root: int
    bones: tuple[tuple[int, int], ...]
    hop_distances: np.ndarray
    adjacency_powers: np.ndarray
    hop_convention: str
    mirror: tuple[int, ...]
    offsets: np.ndarray | None = None

    @property
    def num_joints(self) -> int:
        return len(self.parents)

    @property
    def bone_index(self) -> tuple[np.ndarray, np.ndarray]:
        """(children, parents) index arrays of the bones."""
        bones = np.asarray(self.bones, dtype=np.intp).reshape(-1, 2)
        return bones[:, 0], bones[:, 1]

    def depth_order(self) -> list[int]:
        """Joints sorted so that every parent precedes its children."""
        depth = self.hop_distances[self.root]
        return [int(j) for j in np.argsort(depth, kind="stable")]

    def bone_lengths(self, pose: np.ndarray) -> np.ndarray:
        """Euclidean bone lengths of `pose` [..., J, 3] -> [..., J-1]."""
        child, parent = self.bone_index
        return np.linalg.norm(pose[..., child, :] - pose[..., parent, :], axis=-1)

    def to_document(self) -> dict[str, Any]:
        document = {
            "joints": list(self.joint_names),
            "parents": list(self.parents),
            "root": self.root,
            "mirror": [[j, m] for j, m in enumerate(self.mirror) if j < m],
        }
        if self.offsets is not None:
            document["offsets"] = self.offsets.tolist()
        return document


def load_skeleton(
    source: SkeletonLike, hop_convention: str = HopConventionRegistry.INDICATOR.name
) -> Skeleton:
    """
    Build a validated :class:`Skeleton`.

    Parameters
    ----------
    source: str | dict
        A preset name (``h36m_17``), the path of a skeleton file, or an already
        parsed document.
    hop_convention: str
        ``indicator`` (default) or ``raw_power``.
    """
    convention = HopConventionRegistry.lookup(hop_convention)
    document = _read_document(source)
    for key in ("joints", "parents"):
        if key not in document:
            raise SkeletonFormatError(f"The skeleton document has no '{key}' entry.")
    names = tuple(str(n) for n in document["joints"])
    parents = tuple(int(p) for p in document["parents"])
    if len(names) != len(parents) or not names:
        raise SkeletonFormatError(
            f"Expected one parent per joint, got {len(parents)} parents for"
            f" {len(names)} joints."
        )
    root = _validate_tree(parents, names, document.get("root"))
    bones = tuple((j, p) for j, p in enumerate(parents) if p >= 0)
    hops = hop_distance_matrix(parents)
    offsets = document.get("offsets")
    if offsets is not None:
        offsets = np.asarray(offsets, dtype=np.float64)
        if offsets.shape != (len(parents), 3):
            raise SkeletonFormatError(
                f"offsets must have shape ({len(parents)}, 3), got {offsets.shape}."
            )
        offsets.setflags(write=False)
    powers = adjacency_powers(hops, convention.name)
    powers.setflags(write=False)
    hops.setflags(write=False)
    return Skeleton(
        joint_names=names,
        parents=parents,
        root=root,
        bones=bones,
        hop_distances=hops,
        adjacency_powers=powers,
        hop_convention=convention.name,
        mirror=_mirror_map(document.get("mirror", []), len(parents)),
        offsets=offsets,
    )


def _read_document(source: SkeletonLike) -> dict[str, Any]:
    if isinstance(source, dict):
        return source
    preset = SkeletonPresetRegistry.lookup(source, no_error=True)
    if preset is not None:
        return preset.read()
    if not os.path.exists(source) and "://" not in str(source):
        raise SkeletonFormatError(
            f"'{source}' is neither a skeleton preset"
            f" {SkeletonPresetRegistry.names()} nor an existing file."
        )
    with fsspec.open(source, "r") as f:
        document = yaml.safe_load(f)
    if not isinstance(document, dict):
        raise SkeletonFormatError(f"{source} does not hold a skeleton document.")
    return document


def _validate_tree(parents: tuple[int, ...], names: tuple[str, ...], root) -> int:
    count = len(parents)
    roots = [j for j, p in enumerate(parents) if p == -1]
    if not roots:
        raise SkeletonFormatError("The skeleton has no root (parent -1).")
    if len(roots) > 1:
        raise SkeletonFormatError(
            f"The skeleton has several roots: {[names[j] for j in roots]}.",
            joint=names[roots[1]],
        )
    if root is not None and int(root) != roots[0]:
        raise SkeletonFormatError(
            f"root is {root} but joint {roots[0]} is the one without parent.",
            joint=names[roots[0]],
        )
    for j, p in enumerate(parents):
        if p != -1 and not 0 <= p < count:
            raise SkeletonFormatError(
                f"Joint '{names[j]}' has parent {p}, out of range.", joint=names[j]
            )
        if p == j:
            raise SkeletonFormatError(
                f"Joint '{names[j]}' is its own parent.", joint=names[j]
            )
    for j in range(count):
        node, steps = j, 0
        while parents[node] != -1:
            node = parents[node]
            steps += 1
            if steps > count:
                raise SkeletonFormatError(
                    f"Joint '{names[j]}' is on a cycle and not connected to the root.",
                    joint=names[j],
                )
    return roots[0]


def _mirror_map(pairs, count: int) -> tuple[int, ...]:
    mirror = list(range(count))
    for pair in pairs:
        left, right = (int(i) for i in pair)
        if not (0 <= left < count and 0 <= right < count):
            raise SkeletonFormatError(f"Mirror pair {pair} is out of range.")
        if mirror[left] != left or mirror[right] != right:
            raise SkeletonFormatError(
                f"Joint in mirror pair {pair} is already paired.", joint=left
            )
        mirror[left], mirror[right] = right, left
    return tuple(mirror)


def hop_distance_matrix(parents: tuple[int, ...] | list[int]) -> np.ndarray:
    """Shortest-path length in bones between every pair of joints."""
    count = len(parents)
    adjacency = np.eye(count)
    for j, p in enumerate(parents):
        if p >= 0:
            adjacency[j, p] = adjacency[p, j] = 1
    # reach[d]: joints reachable within d bones
    reach = [np.eye(count) > 0]
    for _ in range(1, count):
        reach.append((reach[-1].astype(np.float64) @ adjacency) > 0)
    hops = np.full((count, count), np.inf)
    for d in range(count - 1, -1, -1):
        hops[reach[d]] = d
    return hops


def adjacency_powers(hops: np.ndarray, convention: str) -> np.ndarray:
    """Binary [3, J, J] hop matrices, zero diagonal."""
    if convention == HopConventionRegistry.INDICATOR.name:
        powers = np.stack([hops == k for k in range(1, HOP_COUNT + 1)])
    else:
        a1 = (hops == 1).astype(np.int64)
        walks = [np.linalg.matrix_power(a1, k) > 0 for k in range(1, HOP_COUNT + 1)]
        powers = np.stack(walks)
    powers = powers.astype(np.float64)
    for k in range(HOP_COUNT):
        np.fill_diagonal(powers[k], 0)
    return powers


def hop_bias_logits(skeleton: Skeleton, gamma) -> Tensor:
    """
    s_topo[h] = sum_k gamma[h, k] * A^k, a [H, J, J] tensor.

    `gamma` is a [H, 3] tensor or array; the result is differentiable in it.
    """
    gamma = as_tensor(gamma)
    powers = skeleton.adjacency_powers.astype(gamma.dtype)
    count = skeleton.num_joints
    flat = ops.matmul(gamma, Tensor(powers.reshape(HOP_COUNT, count * count)))
    return ops.reshape(flat, (gamma.shape[0], count, count))
