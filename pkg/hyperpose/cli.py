"""
Command line front-end, ``hyperpose <subcommand>``.

Config flags are generated from the dataclass fields of ModelConfig,
TrainConfig and SyntheticSpec (``--batch-size``, ``--use-topology`` /
``--no-use-topology``...). Values given on the command line override the
``--config`` file, which overrides the defaults.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
import typing

from hyperpose import main
from hyperpose.hyperpose_exceptions import InvalidHyperposeArgumentError
from hyperpose.hyperpose_logger import VerbosityRegistry
from hyperpose.models.ablation import AblationRegistry
from hyperpose.models.model_config import ModelConfig
from hyperpose.models.synthetic_spec import SyntheticSpec
from hyperpose.models.train_config import TrainConfig
from hyperpose.utils import build_config, read_config_file


def _add_dataclass_flags(parser: argparse.ArgumentParser, cls, prefix: str) -> None:
    group = parser.add_argument_group(f"{cls.__name__} fields")
    hints = typing.get_type_hints(cls)
    for field in dataclasses.fields(cls):
        if field.name == "seed":
            continue
        flag = "--" + field.name.replace("_", "-")
        dest = f"{prefix}{field.name}"
        hint = hints[field.name]
        if hint is bool:
            group.add_argument(
                flag, dest=dest, action=argparse.BooleanOptionalAction, default=None
            )
        elif typing.get_origin(hint) is tuple:
            group.add_argument(flag, dest=dest, type=int, nargs="+", default=None)
        else:
            group.add_argument(flag, dest=dest, type=hint, default=None)


def _collect(args: argparse.Namespace, prefix: str) -> dict:
    return {
        key[len(prefix) :]: value
        for key, value in vars(args).items()
        if key.startswith(prefix) and value is not None
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hyperpose",
        description="Hyperbolic tangent-flow 2D-to-3D pose lifting on a desk.",
    )
    parser.add_argument(
        "--verbosity",
        default=VerbosityRegistry.LOW.name.lower(),
        choices=VerbosityRegistry.names(),
        type=str.lower,
    )
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="Generate a synthetic dataset.")
    synth.add_argument("--out", required=True, help="Dataset file to write.")
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--config", help="YAML file with a 'synth' section.")
    _add_dataclass_flags(synth, SyntheticSpec, "synth_")

    train = commands.add_parser("train", help="Train and checkpoint a network.")
    train.add_argument("--data", required=True, help="Dataset file.")
    train.add_argument("--out", required=True, help="Output directory.")
    train.add_argument("--seed", type=int, required=True)
    train.add_argument("--config", help="YAML file with 'model'/'train' sections.")
    train.add_argument(
        "--ablation",
        default=AblationRegistry.FULL.name,
        choices=AblationRegistry.names(),
    )
    _add_dataclass_flags(train, ModelConfig, "model_")
    _add_dataclass_flags(train, TrainConfig, "train_")

    evaluate = commands.add_parser("eval", help="Per-sequence metric report.")
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--data", required=True)
    evaluate.add_argument("--out", help="CSV (or .yaml) report to write.")
    evaluate.add_argument("--sequential", action="store_true")

    grad = commands.add_parser("gradcheck", help="Finite-difference gradient check.")
    grad.add_argument("--step", dest="h", type=float, default=1e-6)
    grad.add_argument("--tol", type=float, default=1e-3)
    entries = grad.add_mutually_exclusive_group()
    entries.add_argument(
        "--max-entries",
        type=int,
        default=16,
        help="Randomly chosen entries checked per parameter tensor.",
    )
    entries.add_argument(
        "--all-entries",
        dest="max_entries",
        action="store_const",
        const=None,
        help="Check every entry of every parameter tensor.",
    )
    grad.add_argument("--seed", type=int, default=0)

    drift = commands.add_parser("drift", help="Manifold drift time series.")
    drift.add_argument("--checkpoint", required=True)
    drift.add_argument("--data", required=True)
    drift.add_argument("--precision", choices=["fp32", "fp64"])
    drift.add_argument("--out", help="CSV file to write.")
    drift.add_argument("--config", help="YAML file with a 'stability' section.")

    bench = commands.add_parser("bench", help="Banded vs dense temporal attention.")
    bench.add_argument("--frames", type=int, nargs="+", default=[27, 81, 243])
    bench.add_argument("--windows", type=int, nargs="+", default=[3, 9, 27])
    bench.add_argument("--heads", type=int, default=8)
    bench.add_argument("--d-head", type=int, default=64)
    bench.add_argument("--out", help="CSV file to write.")

    params = commands.add_parser("params", help="Count trainable parameters.")
    params.add_argument("--config", help="YAML file with a 'model' section.")
    params.add_argument("--reference", action="store_true")
    _add_dataclass_flags(params, ModelConfig, "model_")
    return parser


def run(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    verbosity = args.verbosity
    try:
        if args.command == "synth":
            values = read_config_file(args.config)["synth"]
            values.update(_collect(args, "synth_"))
            spec = build_config(SyntheticSpec, values, seed=args.seed)
            main.synth(spec, args.out, logs_verbosity=verbosity)
        elif args.command == "train":
            main.train(
                args.data,
                args.out,
                model_config=_collect(args, "model_"),
                train_config=_collect(args, "train_"),
                ablation=args.ablation,
                seed=args.seed,
                config_file=args.config,
                logs_verbosity=verbosity,
            )
        elif args.command == "eval":
            main.evaluate(
                args.checkpoint,
                args.data,
                args.out,
                parallel=not args.sequential,
                logs_verbosity=verbosity,
            )
        elif args.command == "gradcheck":
            report = main.gradcheck(
                args.h, args.tol, args.max_entries, args.seed, logs_verbosity=verbosity
            )
            return 0 if report.passed else 1
        elif args.command == "drift":
            main.driftwatch(
                args.checkpoint,
                args.data,
                args.precision,
                args.out,
                config_file=args.config,
                logs_verbosity=verbosity,
            )
        elif args.command == "bench":
            table = main.bench_attention(
                args.frames,
                args.windows,
                args.heads,
                args.d_head,
                args.out,
                logs_verbosity=verbosity,
            )
            if args.out is None:
                print(table.to_string(index=False))
        elif args.command == "params":
            counts = main.count_parameters(
                _collect(args, "model_"),
                args.config,
                args.reference,
                logs_verbosity=verbosity,
            )
            print(f"runtime={counts['runtime']} analytic={counts['analytic']}")
    except InvalidHyperposeArgumentError as e:
        print(f"hyperpose {args.command}: {e.msg}", file=sys.stderr)
        return 2
    return 0


def entry_point() -> None:
    sys.exit(run())
