from __future__ import annotations

import dataclasses
from typing import Any

import fsspec
import numpy as np
import yaml

from hyperpose.hyperpose_exceptions import (
    DatasetFormatError,
    InvalidHyperposeArgumentError,
)
from hyperpose.hyperpose_types import ConfigDocument

U32 = np.dtype("<u4")
F32 = np.dtype("<f4")
CONFIG_SECTIONS = ("model", "train", "synth", "stability")


def read_config_file(path: str | None) -> ConfigDocument:
    """Read a --config YAML file into its sections, absent sections empty."""
    sections = {name: {} for name in CONFIG_SECTIONS}
    if path is None:
        return sections
    with fsspec.open(path, "r") as f:
        document = yaml.safe_load(f) or {}
    if not isinstance(document, dict):
        raise InvalidHyperposeArgumentError(
            f"The config file {path} must hold a mapping of sections."
        )
    unknown = set(document) - set(CONFIG_SECTIONS)
    if unknown:
        raise InvalidHyperposeArgumentError(
            f"Unknown sections {sorted(unknown)} in {path}."
            f" Use {list(CONFIG_SECTIONS)}."
        )
    for name, values in document.items():
        sections[name] = dict(values or {})
    return sections


def build_config(cls, file_values: dict[str, Any], **overrides):
    """Instantiate a config dataclass from file values then non-None overrides."""
    values = dict(file_values)
    values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise InvalidHyperposeArgumentError(
            f"Unknown {cls.__name__} fields {sorted(unknown)}."
        )
    return cls(**values)


def make_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def log10_or_nan(value: float) -> float:
    return float(np.log10(value)) if value > 0 else float("nan")


def pack_u32(*values: int) -> bytes:
    return np.asarray(values, dtype=U32).tobytes()


@dataclasses.dataclass
class ByteReader:
    """Sequential reader of a little-endian binary payload."""

    payload: bytes
    source: str
    offset: int = 0

    def take(self, size: int) -> bytes:
        if self.offset + size > len(self.payload):
            raise DatasetFormatError(f"{self.source} is truncated.")
        chunk = self.payload[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def u32(self, count: int) -> np.ndarray:
        return np.frombuffer(self.take(count * U32.itemsize), dtype=U32)

    def f32(self, shape: tuple[int, ...]) -> np.ndarray:
        size = int(np.prod(shape)) if shape else 1
        values = np.frombuffer(self.take(size * F32.itemsize), dtype=F32)
        return values.reshape(shape).copy()

    @property
    def exhausted(self) -> bool:
        return self.offset == len(self.payload)
