from __future__ import annotations

import os
from unittest.mock import MagicMock, patch

import pytest

from hyperpose.cli import build_parser, run

# fmt: off
TOY_FLAGS = [
    "--d", "16",
    "--heads", "2",
    "--spatial-layers", "2",
    "--temporal-windows", "1", "3",
    "--mlp-ratio", "2",
    "--joints", "5",
    "--frames", "8",
]
# fmt: on


class Test_parser:
    def test_dataclass_flags(self):
        args = build_parser().parse_args(
            ["train", "--data", "d", "--out", "o", "--seed", "1", "--no-use-topology"]
            + TOY_FLAGS
            + ["--batch-size", "4", "--lr", "0.01"]
        )
        assert args.model_use_topology is False
        assert args.model_temporal_windows == [1, 3]
        assert args.train_batch_size == 4
        assert args.train_lr == 0.01
        assert args.model_use_velocity_stream is None

    def test_unknown_ablation_is_refused(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(
                ["train", "--data", "d", "--out", "o", "--seed", "1"]
                + ["--ablation", "no_attention"]
            )

    def test_verbosity_is_case_insensitive(self):
        args = build_parser().parse_args(["--verbosity", "HIGH", "gradcheck"])
        assert args.verbosity == "high"

    def test_seed_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["synth", "--out", "x"])


class Test_run:
    def test_synth(self, tmp_path):
        out = str(tmp_path / "toy.hpds")
        code = run(
            ["synth", "--out", out, "--seed", "2", "--skeleton", "toy_5"]
            + ["--frames", "8", "--sequences", "2"]
        )
        assert code == 0
        assert os.path.exists(out)

    def test_invalid_value_returns_2(self, tmp_path, capsys):
        out = str(tmp_path / "toy.hpds")
        code = run(["synth", "--out", out, "--seed", "2", "--frames", "0"])
        assert code == 2
        assert "hyperpose synth" in capsys.readouterr().err
        assert not os.path.exists(out)

    def test_params(self, capsys):
        assert run(["params"] + TOY_FLAGS) == 0
        printed = capsys.readouterr().out.strip().splitlines()[-1]
        runtime, analytic = (part.split("=")[1] for part in printed.split())
        assert runtime == analytic

    def test_bench_prints_the_table(self, capsys):
        code = run(
            ["bench", "--frames", "9", "--windows", "1", "--heads", "1"]
            + ["--d-head", "2"]
        )
        assert code == 0
        assert "banded_macs" in capsys.readouterr().out

    @patch("hyperpose.main.gradcheck")
    def test_gradcheck_exit_code(self, gradcheck_mock: MagicMock):
        gradcheck_mock.return_value.passed = False
        assert run(["gradcheck", "--max-entries", "2"]) == 1
        gradcheck_mock.assert_called_once()
        assert gradcheck_mock.call_args[0][2] == 2

    @patch("hyperpose.main.gradcheck")
    def test_gradcheck_all_entries(self, gradcheck_mock: MagicMock):
        gradcheck_mock.return_value.passed = True
        assert run(["gradcheck", "--all-entries"]) == 0
        assert gradcheck_mock.call_args[0][2] is None

    def test_gradcheck_entry_flags_conflict(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(
                ["gradcheck", "--all-entries", "--max-entries", "3"]
            )

    def test_gradcheck_samples_by_default(self):
        assert build_parser().parse_args(["gradcheck"]).max_entries == 16

    def test_train_eval_drift(self, tmp_path):
        data = str(tmp_path / "toy.hpds")
        out = str(tmp_path / "run")
        checkpoint = os.path.join(out, "best.hpck")
        report = str(tmp_path / "metrics.csv")
        drift = str(tmp_path / "drift.csv")
        synth = ["synth", "--out", data, "--seed", "0", "--skeleton", "toy_5"]
        train = ["train", "--data", data, "--out", out, "--seed", "0"]
        train += TOY_FLAGS + ["--epochs", "1", "--precision", "fp64", "--no-hflip"]
        evaluate = ["eval", "--checkpoint", checkpoint, "--data", data]
        evaluate += ["--out", report, "--sequential"]

        assert run(synth + ["--frames", "8", "--sequences", "2"]) == 0
        assert run(train) == 0
        assert run(evaluate) == 0
        assert os.path.exists(report)
        drift_args = ["drift", "--checkpoint", checkpoint, "--data", data]
        code = run(drift_args + ["--out", drift])
        assert code == 0
        assert os.path.exists(drift)
