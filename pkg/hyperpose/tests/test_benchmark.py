from __future__ import annotations

import numpy as np
import pytest

from hyperpose.harness.benchmark import bench_attention, stack_ratio
from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.models.constants import BENCH_COLUMNS


def test_stack_ratio_at_the_reference_length():
    # 3 * 243^2 dense pairs over the valid band pairs of W = 3, 9 and 27
    assert stack_ratio(243) == pytest.approx(177147 / 18825)
    assert 9.4 < stack_ratio(243) < 9.42


def test_stack_ratio_of_a_full_band_is_one():
    assert stack_ratio(8, windows=(7, 12)) == pytest.approx(1.0)


class Test_bench_attention:
    def test_grid(self):
        table = bench_attention([9, 20], [1, 3], heads=2, d_head=4)
        assert list(table.columns) == BENCH_COLUMNS
        assert list(zip(table["T"], table["W"])) == [(9, 1), (9, 3), (20, 1), (20, 3)]
        np.testing.assert_allclose(
            table["ratio"], table["dense_macs"] / table["banded_macs"]
        )
        assert (table["rss_mb"] > 0).all()

    def test_exact_counts(self):
        table = bench_attention([10], [2], heads=2, d_head=4)
        row = table.iloc[0]
        assert row["dense_macs"] == 2 * 4 * 2 * 10 * 10
        assert row["banded_macs"] == 2 * 4 * 2 * (10 * 5 - 6)

    def test_band_wider_than_the_sequence(self):
        table = bench_attention([5], [30], heads=1, d_head=2)
        assert table["banded_macs"].iloc[0] == table["dense_macs"].iloc[0]

    @pytest.mark.parametrize(
        "frames, windows", [([], [1]), ([5], []), ([0], [1]), ([5], [-1])]
    )
    def test_invalid_grid(self, frames, windows):
        with pytest.raises(InvalidHyperposeArgumentError):
            bench_attention(frames, windows)
