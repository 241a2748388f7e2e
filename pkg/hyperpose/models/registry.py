from __future__ import annotations

from abc import ABC
from copy import deepcopy
from typing import Generic, TypeVar

from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError

T = TypeVar("T")


class Registry(Generic[T], ABC):
    """Namespace of constant, named items of a single type.

    Subclasses declare their items as class attributes and are never
    instantiated. Lookup is case insensitive and accepts either the attribute
    name or any alias returned by ``get_item_aliases``; items are returned as
    deep copies so callers may mutate them freely.

    The CLI builds its ``choices`` from ``names()``, so every registry doubles
    as the list of accepted values of one command line flag.
    """

    _item_class: type  # runtime type for the generic `T`

    @classmethod
    def lookup(cls, query: T | str, no_error: bool = False) -> T | None:
        if isinstance(query, cls._item_class):
            return query
        if isinstance(query, str):
            item = cls._find(query.strip().upper())
            if item is not None:
                return deepcopy(item)
        if no_error:
            return None
        raise InvalidHyperposeArgumentError(
            f"Unknown {cls._item_class.__qualname__}: '{query}'. "
            f"Use one of {cls.names()}."
        )

    @classmethod
    def _find(cls, upper_query: str) -> T | None:
        for key, item in cls.catalog().items():
            if upper_query == key.upper() or upper_query in cls.get_item_aliases(item):
                return item
        return None

    @staticmethod
    def get_item_aliases(item: T) -> list[str]:
        """Should be overridden when items carry more than a `name`."""
        return [item.name.upper()]

    @classmethod
    def names(cls) -> list[str]:
        """Canonical lower-case name of every item, in declaration order."""
        return [item.name.lower() for item in cls.values()]

    @classmethod
    def catalog(cls) -> dict[str, T]:
        return {k: v for k, v in vars(cls).items() if isinstance(v, cls._item_class)}

    @classmethod
    def values(cls) -> list[T]:
        return list(cls.catalog().values())
