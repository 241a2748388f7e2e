"""
Trainable parameters: named store, initialisation and the checkpoint file.

Checkpoint layout, every integer a little-endian u32::

    b"HPCK" | version | tensor count
    per tensor: name length | UTF-8 name | ndim | extents... | fp32 LE payload

A YAML sidecar ``<checkpoint>.config.yaml`` holds the model config, the
precision, the epoch and the best validation MPJPE.
"""
from __future__ import annotations

from typing import Any, Iterator

import fsspec
import numpy as np
import yaml

from hyperpose.autodiff.tensor import Tensor
from hyperpose.hyperpose_exceptions import (
    DatasetFormatError,
    InvalidHyperposeArgumentError,
    ShapeMismatchError,
)
from hyperpose.models.constants import (
    CHECKPOINT_MAGIC,
    CHECKPOINT_SIDECAR_SUFFIX,
    CHECKPOINT_VERSION,
)
from hyperpose.models.model_config import ModelConfig
from hyperpose.utils import F32, ByteReader, pack_u32


class ParameterStore:
    """Ordered name -> leaf tensor mapping of a model's trainable scalars."""

    def __init__(self, dtype=np.float64):
        self.dtype = np.dtype(dtype)
        self._params: dict[str, Tensor] = {}
        # matrices get weight decay, vectors and scalars do not
        self._decayed: set[str] = set()

    def add(self, name: str, value: np.ndarray, decay: bool = False) -> Tensor:
        if name in self._params:
            raise InvalidHyperposeArgumentError(f"Parameter {name} already exists.")
        tensor = Tensor(
            np.array(value, dtype=self.dtype, copy=True), requires_grad=True, name=name
        )
        self._params[name] = tensor
        if decay:
            self._decayed.add(name)
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def is_decayed(self, name: str) -> bool:
        return name in self._decayed

    def zero_grad(self) -> None:
        for p in self:
            p.zero_grad()

    def count(self) -> int:
        return int(sum(p.size for p in self))

    def state(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.items()}

    def load_state(self, state: dict[str, np.ndarray]) -> None:
        missing = set(self._params) - set(state)
        unexpected = set(state) - set(self._params)
        if missing or unexpected:
            raise InvalidHyperposeArgumentError(
                f"Checkpoint does not match the model: missing {sorted(missing)},"
                f" unexpected {sorted(unexpected)}."
            )
        for name, value in state.items():
            target = self._params[name]
            if value.shape != target.shape:
                raise ShapeMismatchError(
                    f"Parameter {name} has shape {target.shape}, checkpoint holds"
                    f" {value.shape}."
                )
            target.data = np.array(value, dtype=self.dtype, copy=True)


def uniform_init(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """Zero-mean uniform of half-width 1/sqrt(fan_in)."""
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


def count_parameters(params: ParameterStore | None) -> int:
    """Exact number of trainable scalars, 0 for an empty model."""
    if params is None:
        return 0
    return params.count()


def analytic_parameter_count(config: ModelConfig) -> int:
    """Closed-form parameter count of :class:`HyperPoseNetwork` for `config`."""
    d, h, j, ff = config.d, config.heads, config.joints, config.d_ff
    layer_norm = 2 * d
    mlp = layer_norm + d * ff + ff + ff * d + d
    attention = 3 * d * d + 3 * d + h + d * d + d
    embedding = 2 * d + 2 + j * d
    kinematic = config.uses_velocity
    if kinematic:
        embedding += 2 * d
    spatial = layer_norm + attention + mlp
    if kinematic:
        spatial += layer_norm + (1 if config.shared_lambda else h)
    if config.use_topology:
        spatial += 3 * h
    temporal = layer_norm + attention + mlp
    head = layer_norm + j * (d * ff + ff * 3)
    return embedding + config.spatial_layers * (spatial + temporal) + head


def save_checkpoint(
    path: str, params: ParameterStore, metadata: dict[str, Any]
) -> None:
    """Write the binary parameter file and its YAML sidecar."""
    chunks = [CHECKPOINT_MAGIC, pack_u32(CHECKPOINT_VERSION, len(params))]
    for name, tensor in params.items():
        encoded = name.encode("utf-8")
        chunks.append(pack_u32(len(encoded)))
        chunks.append(encoded)
        chunks.append(pack_u32(tensor.ndim, *tensor.shape))
        chunks.append(np.ascontiguousarray(tensor.data, dtype=F32).tobytes())
    with fsspec.open(path, "wb") as f:
        f.write(b"".join(chunks))
    with fsspec.open(sidecar_path(path), "w") as f:
        yaml.safe_dump(metadata, f, sort_keys=False)


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    """Read a checkpoint into (name -> fp32 array, sidecar metadata)."""
    with fsspec.open(path, "rb") as f:
        payload = f.read()
    reader = ByteReader(payload, path)
    if reader.take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise DatasetFormatError(f"{path} is not a hyperpose checkpoint.")
    version, count = reader.u32(2)
    if version != CHECKPOINT_VERSION:
        raise DatasetFormatError(
            f"{path} has checkpoint version {version}, expected {CHECKPOINT_VERSION}."
        )
    state = {}
    for _ in range(count):
        (name_length,) = reader.u32(1)
        name = reader.take(name_length).decode("utf-8")
        (ndim,) = reader.u32(1)
        shape = tuple(int(e) for e in reader.u32(ndim))
        state[name] = reader.f32(shape)
    if not reader.exhausted:
        raise DatasetFormatError(f"{path} has trailing bytes after its tensors.")
    with fsspec.open(sidecar_path(path), "r") as f:
        metadata = yaml.safe_load(f) or {}
    return state, metadata


def sidecar_path(path: str) -> str:
    return f"{path}{CHECKPOINT_SIDECAR_SUFFIX}"
