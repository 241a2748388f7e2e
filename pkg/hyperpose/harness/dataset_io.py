"""
Pose datasets.

In memory a dataset is an :class:`xarray.Dataset` with an ``inputs`` variable
(x, y, confidence) and a ``targets`` variable (pelvis-centred x, y, z in mm),
both over ``(sequence, frame, joint, channel)``. Its attrs hold the generating
spec and the skeleton document.

On disk::

    b"HPSE" | u32 version | u32 N, T, J, C_in, C_out
    fp32 LE inputs [N, T, J, C_in] | fp32 LE targets [N, T, J, C_out]

plus a YAML manifest ``<path>.manifest.yaml`` with the dims, the generator
settings, the seed and the skeleton.
"""
from __future__ import annotations

from typing import Any

import fsspec
import numpy as np
import xarray as xr
import yaml

from hyperpose.hyperpose_exceptions import DatasetFormatError, ShapeMismatchError
from hyperpose.kinematics.skeleton import Skeleton, load_skeleton
from hyperpose.models.constants import (
    DATASET_DIMS,
    DATASET_MAGIC,
    DATASET_VERSION,
    MANIFEST_SUFFIX,
)
from hyperpose.utils import F32, ByteReader, pack_u32


def make_dataset(
    inputs: np.ndarray,
    targets: np.ndarray,
    spec: dict[str, Any] | None = None,
    skeleton: dict[str, Any] | None = None,
) -> xr.Dataset:
    inputs = np.asarray(inputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if inputs.ndim != 4 or inputs.shape[-1] != 3:
        raise ShapeMismatchError(f"Expected [N, T, J, 3] inputs, got {inputs.shape}.")
    if targets.shape != inputs.shape:
        raise ShapeMismatchError(
            f"Targets {targets.shape} do not match inputs {inputs.shape}."
        )
    attrs = {"spec": spec or {}}
    if skeleton is not None:
        attrs["skeleton"] = skeleton
    return xr.Dataset(
        {
            "inputs": (DATASET_DIMS, inputs),
            "targets": (DATASET_DIMS, targets),
        },
        coords={"sequence": [f"seq{i:03d}" for i in range(inputs.shape[0])]},
        attrs=attrs,
    )


def dataset_skeleton(ds: xr.Dataset, hop_convention: str | None = None) -> Skeleton:
    document = ds.attrs.get("skeleton")
    if document is None:
        document = ds.attrs.get("spec", {}).get("skeleton", "h36m_17")
    if hop_convention is None:
        return load_skeleton(document)
    return load_skeleton(document, hop_convention)


def manifest_path(path: str) -> str:
    return f"{path}{MANIFEST_SUFFIX}"


def write_dataset(ds: xr.Dataset, path: str) -> None:
    inputs = ds["inputs"].values
    targets = ds["targets"].values
    n, t, j, c_in = inputs.shape
    c_out = targets.shape[-1]
    payload = b"".join(
        [
            DATASET_MAGIC,
            pack_u32(DATASET_VERSION, n, t, j, c_in, c_out),
            np.ascontiguousarray(inputs, dtype=F32).tobytes(),
            np.ascontiguousarray(targets, dtype=F32).tobytes(),
        ]
    )
    with fsspec.open(path, "wb") as f:
        f.write(payload)
    spec = dict(ds.attrs.get("spec", {}))
    manifest = {
        "format": DATASET_MAGIC.decode("ascii"),
        "version": DATASET_VERSION,
        "dims": dict(zip(["N", "T", "J", "C_in", "C_out"], [n, t, j, c_in, c_out])),
        "seed": spec.get("seed"),
        "spec": spec,
        "skeleton": ds.attrs.get("skeleton"),
    }
    with fsspec.open(manifest_path(path), "w") as f:
        yaml.safe_dump(manifest, f, sort_keys=False)


def read_dataset(path: str) -> xr.Dataset:
    with fsspec.open(path, "rb") as f:
        payload = f.read()
    reader = ByteReader(payload, path)
    if reader.take(len(DATASET_MAGIC)) != DATASET_MAGIC:
        raise DatasetFormatError(f"{path} is not a hyperpose dataset.")
    (version,) = reader.u32(1)
    if version != DATASET_VERSION:
        raise DatasetFormatError(
            f"{path} has dataset version {version}, expected {DATASET_VERSION}."
        )
    n, t, j, c_in, c_out = (int(e) for e in reader.u32(5))
    if c_in != 3 or c_out != 3:
        raise DatasetFormatError(
            f"{path} has {c_in} input and {c_out} output channels, expected 3 and 3."
        )
    inputs = reader.f32((n, t, j, c_in))
    targets = reader.f32((n, t, j, c_out))
    if not reader.exhausted:
        raise DatasetFormatError(f"{path} has trailing bytes after its payload.")
    manifest = {}
    fs, manifest_file = fsspec.core.url_to_fs(manifest_path(path))
    if fs.exists(manifest_file):
        with fsspec.open(manifest_path(path), "r") as f:
            manifest = yaml.safe_load(f) or {}
    return make_dataset(
        inputs.astype(np.float64),
        targets.astype(np.float64),
        spec=manifest.get("spec"),
        skeleton=manifest.get("skeleton"),
    )


def split_dataset(
    ds: xr.Dataset, validation_fraction: float, seed: int
) -> tuple[xr.Dataset, xr.Dataset]:
    """(train, validation) by sequence; at fraction 0 both are the whole set."""
    count = ds.sizes["sequence"]
    held_out = int(round(count * validation_fraction))
    if held_out == 0 or held_out >= count:
        return ds, ds
    order = np.random.default_rng(seed).permutation(count)
    train = ds.isel(sequence=np.sort(order[held_out:]))
    return train, ds.isel(sequence=np.sort(order[:held_out]))
