from __future__ import annotations

import dataclasses

import fsspec
import pandas as pd
import yaml

from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.models.constants import (
    AVG_ROW_LABEL,
    DIAGNOSTIC_DEFINITION_ID,
    METRIC_COLUMNS,
    SEQUENCE_COLUMN,
)

DIAGNOSTIC_COLUMNS = ["distortion", "map", "entropy"]


@dataclasses.dataclass
class MetricReport:
    """
    Per-sequence metric table with a trailing AVG row.

    Error metrics are in mm (mpjve in mm/frame, accel in mm/frame^2). The
    ``distortion``, ``map`` and ``entropy`` diagnostics follow the local
    definitions tagged by ``definition_id``; NaN marks a diagnostic that was
    not computed.
    """

    table: pd.DataFrame
    definition_id: str = DIAGNOSTIC_DEFINITION_ID

    @classmethod
    def from_rows(
        cls, names: list[str], rows: list[dict[str, float]]
    ) -> MetricReport:
        if len(names) != len(rows) or not rows:
            raise InvalidHyperposeArgumentError(
                f"Expected one row per sequence, got {len(rows)} rows for"
                f" {len(names)} sequences."
            )
        table = pd.DataFrame(rows, columns=METRIC_COLUMNS, index=pd.Index(names))
        table.index.name = SEQUENCE_COLUMN
        table.loc[AVG_ROW_LABEL] = table.mean(axis=0)
        return cls(table=table)

    @property
    def sequences(self) -> pd.DataFrame:
        return self.table.drop(index=AVG_ROW_LABEL)

    @property
    def average(self) -> pd.Series:
        return self.table.loc[AVG_ROW_LABEL]

    def to_csv(self, path: str) -> None:
        with fsspec.open(path, "w", newline="") as f:
            self.table.to_csv(f, float_format="%.10g", lineterminator="\n")

    def to_yaml(self, path: str) -> None:
        document = {
            "definition_id": self.definition_id,
            "sequences": {
                str(name): {k: float(v) for k, v in row.items()}
                for name, row in self.table.iterrows()
            },
        }
        with fsspec.open(path, "w") as f:
            yaml.safe_dump(document, f, sort_keys=False)

    @classmethod
    def read_csv(cls, path: str) -> MetricReport:
        with fsspec.open(path, "r") as f:
            table = pd.read_csv(f, index_col=SEQUENCE_COLUMN)
        table.index = table.index.astype(str)
        return cls(table=table)
