from __future__ import annotations

import dataclasses
from typing import Any

from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.models.constants import DEFAULT_TEMPORAL_WINDOWS, R_Q, R_SAFETY
from hyperpose.models.hop_convention import HopConventionRegistry

ATTENTION_KINDS = ("lorentz", "euclidean")


@dataclasses.dataclass
class ModelConfig:
    """
    Architecture of the tangent-flow network.

    Attributes
    ----------
    d: int
        Embedding dimension of the tangent hidden state.
    heads: int
        Attention heads, ``d`` must be divisible by it.
    spatial_layers: int
        Number of (spatial, temporal) block pairs.
    temporal_windows: tuple[int, ...]
        Half-width W of the temporal band of each pair, in depth order.
    mlp_ratio: int
        Hidden width of block MLPs and of the output head, as a multiple of ``d``.
    dropout: float
        Rate applied to attention weights and MLP outputs in training mode.
    joints: int
        Number of skeleton joints J.
    frames: int
        Number of frames T of a training window.
    hop_convention: str
        ``indicator`` or ``raw_power``, see :class:`HopConvention`.
    shared_lambda: bool
        Use a single velocity weight for every head instead of one per head.
    attention_kind: str
        ``lorentz`` for the hyperbolic proximity logit, ``euclidean`` for a
        scaled dot product on the clipped tangents.
    use_velocity_penalty, use_topology, use_velocity_stream: bool
        Switch the kinematic logit, the hop bias and the velocity embedding.
    freeze_higher_hops: bool
        Keep gamma_2 and gamma_3 at 0 (single-hop topology).
    safety_clip: bool
        Clip the hidden tangent state to ``r_safety`` between blocks.
    r_q, r_safety: float
        Norm bounds of the Q/K tangents and of the hidden state.
    output_scale: float
        Multiplier of the head output; the network works in metres and
        reports millimetres with the default 1000.
    """

    d: int = 64
    heads: int = 4
    spatial_layers: int = 3
    temporal_windows: tuple[int, ...] = DEFAULT_TEMPORAL_WINDOWS
    mlp_ratio: int = 4
    dropout: float = 0.1
    joints: int = 17
    frames: int = 27
    hop_convention: str = HopConventionRegistry.INDICATOR.name
    shared_lambda: bool = False
    attention_kind: str = "lorentz"
    use_velocity_penalty: bool = True
    use_topology: bool = True
    use_velocity_stream: bool = True
    freeze_higher_hops: bool = False
    safety_clip: bool = True
    r_q: float = R_Q
    r_safety: float = R_SAFETY
    output_scale: float = 1000.0

    def __post_init__(self):
        self.temporal_windows = tuple(int(w) for w in self.temporal_windows)
        for field in ("d", "heads", "spatial_layers", "mlp_ratio", "joints", "frames"):
            if getattr(self, field) <= 0:
                raise InvalidHyperposeArgumentError(
                    f"{field} must be positive, got {getattr(self, field)}."
                )
        if self.d % self.heads != 0:
            raise InvalidHyperposeArgumentError(
                f"d={self.d} is not divisible by heads={self.heads}."
            )
        if len(self.temporal_windows) != self.spatial_layers:
            raise InvalidHyperposeArgumentError(
                f"Expected one temporal window per block pair ({self.spatial_layers}),"
                f" got {list(self.temporal_windows)}."
            )
        if any(w < 1 for w in self.temporal_windows):
            raise InvalidHyperposeArgumentError(
                f"Temporal windows must be >= 1, got {list(self.temporal_windows)}."
            )
        if not 0 <= self.dropout < 1:
            raise InvalidHyperposeArgumentError(
                f"dropout must be in [0, 1), got {self.dropout}."
            )
        if self.attention_kind not in ATTENTION_KINDS:
            raise InvalidHyperposeArgumentError(
                f"Unknown attention kind '{self.attention_kind}',"
                f" use one of {list(ATTENTION_KINDS)}."
            )
        if not 0 < self.r_q <= self.r_safety:
            raise InvalidHyperposeArgumentError(
                f"Expected 0 < r_q <= r_safety, got {self.r_q} and {self.r_safety}."
            )
        self.hop_convention = HopConventionRegistry.lookup(self.hop_convention).name

    @property
    def d_head(self) -> int:
        return self.d // self.heads

    @property
    def d_ff(self) -> int:
        return self.mlp_ratio * self.d

    @property
    def uses_velocity(self) -> bool:
        """The velocity stream only feeds the kinematic logit."""
        return self.use_velocity_stream and self.use_velocity_penalty

    def effective_window(self, window: int, frames: int) -> int:
        """The band half-width actually used on a sequence of `frames` frames."""
        return max(0, min(window, frames - 1))

    def to_dict(self) -> dict[str, Any]:
        data = dataclasses.asdict(self)
        data["temporal_windows"] = list(self.temporal_windows)
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ModelConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidHyperposeArgumentError(
                f"Unknown model config keys {sorted(unknown)}."
            )
        return cls(**data)

    @classmethod
    def reference(cls) -> ModelConfig:
        """The full-size configuration, kept for parameter counting."""
        return cls(d=512, heads=8, spatial_layers=3, joints=17, frames=243)
