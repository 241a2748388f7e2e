from __future__ import annotations

import dataclasses
from typing import Any

from hyperpose.models.model_config import ModelConfig
from hyperpose.models.registry import Registry
from hyperpose.models.train_config import TrainConfig


@dataclasses.dataclass
class Ablation:
    """A named set of overrides switching one component of the model off."""

    name: str
    description: str
    model_overrides: dict[str, Any] = dataclasses.field(default_factory=dict)
    train_overrides: dict[str, Any] = dataclasses.field(default_factory=dict)

    def apply(
        self, model_config: ModelConfig, train_config: TrainConfig
    ) -> tuple[ModelConfig, TrainConfig]:
        model_overrides = dict(self.model_overrides)
        if "temporal_windows" in model_overrides:
            model_overrides["temporal_windows"] = (
                model_overrides["temporal_windows"],
            ) * model_config.spatial_layers
        return (
            dataclasses.replace(model_config, **model_overrides),
            dataclasses.replace(train_config, **self.train_overrides),
        )


class AblationRegistry(Registry[Ablation]):
    _item_class = Ablation

    FULL = Ablation("full", "Every component enabled.")
    EUCLIDEAN_ATTENTION = Ablation(
        "euclidean_attention",
        "Scaled dot-product logits on the clipped Q/K tangents, no Lorentz lift.",
        model_overrides={"attention_kind": "euclidean"},
    )
    SINGLE_HOP = Ablation(
        "single_hop",
        "gamma_2 and gamma_3 frozen at 0.",
        model_overrides={"freeze_higher_hops": True},
    )
    NO_VELOCITY_PENALTY = Ablation(
        "no_velocity_penalty",
        "Kinematic logit removed (lambda = 0).",
        model_overrides={"use_velocity_penalty": False},
    )
    NO_VELOCITY_PENALTY_NO_TOPOLOGY = Ablation(
        "no_velocity_penalty_no_topology",
        "Kinematic logit and hop bias removed.",
        model_overrides={"use_velocity_penalty": False, "use_topology": False},
    )
    POSITION_ONLY = Ablation(
        "position_only",
        "No velocity embedding, the velocity stream is zero.",
        model_overrides={"use_velocity_stream": False},
    )
    SINGLE_WINDOW_1 = Ablation(
        "single_window_1",
        "Every temporal block uses W = 1.",
        model_overrides={"temporal_windows": 1},
    )
    SINGLE_WINDOW_5 = Ablation(
        "single_window_5",
        "Every temporal block uses W = 5.",
        model_overrides={"temporal_windows": 5},
    )
    NO_VELOCITY_LOSS = Ablation(
        "no_velocity_loss",
        "Geodesic velocity term removed from the objective.",
        train_overrides={"use_velocity_loss": False},
    )
    NO_BONE_LOSS = Ablation(
        "no_bone_loss",
        "Geodesic bone term removed from the objective.",
        train_overrides={"use_bone_loss": False},
    )
    FIXED_WEIGHTS = Ablation(
        "fixed_weights",
        "Uncertainty weighting disabled, every sigma^2 frozen at 1.",
        train_overrides={"learn_weights": False},
    )
    NO_CURRICULUM = Ablation(
        "no_curriculum",
        "Riemannian terms weighted 1 from the first epoch.",
        train_overrides={"use_curriculum": False},
    )
