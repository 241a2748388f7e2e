from __future__ import annotations

import dataclasses
from typing import Any, Callable, Literal

from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.models.registry import Registry


@dataclasses.dataclass
class MotionGenerator:
    """A joint-angle trajectory generator, resolved lazily to its function."""

    name: Literal["static", "gait_sine", "random_smooth_spline"]
    description: str

    @property
    def function(self) -> Callable:
        from hyperpose.harness import synthetic

        return getattr(synthetic, f"generate_{self.name}")


class MotionGeneratorRegistry(Registry[MotionGenerator]):
    _item_class = MotionGenerator

    STATIC = MotionGenerator("static", "A fixed random pose held on every frame.")
    GAIT_SINE = MotionGenerator(
        "gait_sine", "Periodic limb swing with a configurable period in frames."
    )
    RANDOM_SMOOTH_SPLINE = MotionGenerator(
        "random_smooth_spline", "Cubic interpolation of random joint-angle keyframes."
    )

    @staticmethod
    def get_item_aliases(item: MotionGenerator) -> list[str]:
        return [item.name.upper(), item.name.upper().replace("_", "-")]


@dataclasses.dataclass
class SyntheticSpec:
    """
    Description of a synthetic dataset.

    Attributes
    ----------
    skeleton: str
        Name of a skeleton preset or path of a skeleton file.
    generator: str
        Motion generator id.
    frames: int
        Sequence length T.
    sequences: int
        Number of sequences N.
    seed: int
        Seed of every random draw of the generator.
    period: float
        Gait period in frames, used by ``gait_sine``.
    keyframes: int
        Number of random keyframes of ``random_smooth_spline``.
    amplitude: float
        Joint-angle amplitude in radians.
    projection_scale: float
        Orthographic scale from millimetres to normalised camera coordinates.
    projection_noise: float
        Std of gaussian noise added to the 2D projection, 0 for exact projection.
    occlusion_rate: float
        Expected occlusion episodes per joint and sequence.
    occlusion_length: int
        Mean length in frames of an occlusion episode.
    """

    skeleton: str = "h36m_17"
    generator: str = MotionGeneratorRegistry.GAIT_SINE.name
    frames: int = 27
    sequences: int = 4
    seed: int = 0
    period: float = 24.0
    keyframes: int = 4
    amplitude: float = 0.5
    projection_scale: float = 1.0 / 1000.0
    projection_noise: float = 0.0
    occlusion_rate: float = 0.0
    occlusion_length: int = 4

    def __post_init__(self):
        if self.frames < 1 or self.sequences < 1:
            raise InvalidHyperposeArgumentError(
                f"frames and sequences must be >= 1, got {self.frames} and"
                f" {self.sequences}."
            )
        if self.period <= 0 or self.projection_scale <= 0:
            raise InvalidHyperposeArgumentError(
                "period and projection_scale must be positive."
            )
        if self.keyframes < 2:
            raise InvalidHyperposeArgumentError("At least 2 keyframes are needed.")
        if self.projection_noise < 0 or self.occlusion_rate < 0:
            raise InvalidHyperposeArgumentError(
                "projection_noise and occlusion_rate must be non-negative."
            )
        self.generator = MotionGeneratorRegistry.lookup(self.generator).name

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> SyntheticSpec:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidHyperposeArgumentError(
                f"Unknown synth keys {sorted(unknown)}."
            )
        return cls(**data)
