from __future__ import annotations

import dataclasses
from typing import Literal

from hyperpose.models.registry import Registry


@dataclasses.dataclass
class HopConvention:
    """How the k-hop adjacency matrices A^k of a skeleton are built.

    ``indicator`` marks pairs whose shortest path is exactly k bones long,
    ``raw_power`` binarizes the k-th power of A^1, which also marks shorter
    paths reached by walking back and forth.
    """

    name: Literal["indicator", "raw_power"]


class HopConventionRegistry(Registry[HopConvention]):
    _item_class = HopConvention

    INDICATOR = HopConvention("indicator")
    RAW_POWER = HopConvention("raw_power")
