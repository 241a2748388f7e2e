from __future__ import annotations

import dataclasses
from typing import Any

from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.models.constants import CURRICULUM_FULL, CURRICULUM_ZERO_END, LIFT_SCALE
from hyperpose.models.precision import PrecisionRegistry


@dataclasses.dataclass
class TrainConfig:
    """
    Optimisation settings of a training run.

    Attributes
    ----------
    lr: float
        Peak AdamW learning rate.
    weight_decay: float
        Decoupled weight decay, applied to matrices only.
    batch_size: int
        Sequences per optimizer step.
    epochs: int
        Number of passes over the training set.
    warmup_epochs: int
        Length of the linear warmup from 0 to ``lr``.
    lr_floor: float
        Final learning rate as a fraction of ``lr``.
    grad_clip: float
        Global l2 bound of the gradient.
    seed: int
        Seed of parameter init, batching, augmentation and dropout.
    precision: str
        ``fp32`` or ``fp64``.
    hflip, confidence_dropout: bool
        Augmentations.
    confidence_dropout_p: float
        Per-sample probability of zeroing the confidence of 1 or 2 joints.
    validation_fraction: float
        Share of sequences held out for best-checkpoint selection, 0 to
        select on the training set.
    lift_scale: float
        Scale applied to millimetre coordinates before the hyperboloid lift.
    use_velocity_loss, use_bone_loss, learn_weights, use_curriculum: bool
        Ablation switches of the loss suite.
    """

    lr: float = 1e-4
    weight_decay: float = 1e-2
    batch_size: int = 8
    epochs: int = 60
    warmup_epochs: int = 5
    lr_floor: float = 0.01
    grad_clip: float = 1.0
    seed: int = 0
    precision: str = PrecisionRegistry.FP32.name
    hflip: bool = True
    confidence_dropout: bool = True
    confidence_dropout_p: float = 0.2
    validation_fraction: float = 0.0
    lift_scale: float = LIFT_SCALE
    curriculum_zero_end: int = CURRICULUM_ZERO_END
    curriculum_full: int = CURRICULUM_FULL
    use_velocity_loss: bool = True
    use_bone_loss: bool = True
    learn_weights: bool = True
    use_curriculum: bool = True

    def __post_init__(self):
        for field in ("lr", "batch_size", "epochs", "grad_clip", "lift_scale"):
            if getattr(self, field) <= 0:
                raise InvalidHyperposeArgumentError(
                    f"{field} must be positive, got {getattr(self, field)}."
                )
        if self.weight_decay < 0 or self.warmup_epochs < 0:
            raise InvalidHyperposeArgumentError(
                "weight_decay and warmup_epochs must be non-negative."
            )
        if not 0 <= self.lr_floor <= 1:
            raise InvalidHyperposeArgumentError(
                f"lr_floor is a fraction of lr, got {self.lr_floor}."
            )
        if not 0 <= self.confidence_dropout_p <= 1:
            raise InvalidHyperposeArgumentError(
                f"confidence_dropout_p must be in [0, 1], got"
                f" {self.confidence_dropout_p}."
            )
        if not 0 <= self.validation_fraction < 1:
            raise InvalidHyperposeArgumentError(
                f"validation_fraction must be in [0, 1), got"
                f" {self.validation_fraction}."
            )
        if self.curriculum_full <= self.curriculum_zero_end:
            raise InvalidHyperposeArgumentError(
                "curriculum_full must come after curriculum_zero_end."
            )
        self.precision = PrecisionRegistry.lookup(self.precision).name

    @property
    def dtype(self):
        return PrecisionRegistry.lookup(self.precision).dtype

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TrainConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidHyperposeArgumentError(
                f"Unknown train config keys {sorted(unknown)}."
            )
        return cls(**data)
