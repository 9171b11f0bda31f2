"""Command-line surface.

Verbs mirror the pipeline stages:

    limi make-data --out DIR [--seed N]
    limi fit-gen --config cfg.json [--seed N] [--out DIR] [--full-scale]
    limi train-model --config cfg.json ...
    limi approximate --config cfg.json ...
    limi probe --config cfg.json ...
    limi baseline-random --config cfg.json ...
    limi evaluate --config cfg.json --d-idi FILE ...
    limi retrain --config cfg.json --d-idi FILE ...
    limi ablate-lambda --config cfg.json --lambdas 0,0.1,0.3 ...

Exit codes: 0 success; 2 config/usage; 3 data validation; 4 model training;
5 unlearnable boundary; 6 insufficient instances; 7 bridge failure;
1 unexpected error. Worker count for decode/predict fan-out comes from the
LIMI_WORKERS environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import pipeline
from .datasets import census_test, census_train, census_schema, write_csv
from .errors import (
    BadLabel,
    BoundaryUnlearnable,
    BridgeFailure,
    ConfigError,
    ConstantColumn,
    DegenerateColumn,
    EmptyGroup,
    EmptySample,
    InsufficientInstances,
    MissingColumn,
    NoConvergence,
    OneClassSample,
    OutOfDomainValue,
    SchemaError,
    SingleClassDataset,
    UndefinedRate,
    ZeroElapsed,
)

_EXIT_CODES = (
    (2, (ConfigError, SchemaError, MissingColumn, FileNotFoundError)),
    (3, (OutOfDomainValue, BadLabel, DegenerateColumn, ConstantColumn,
         EmptySample, EmptyGroup, UndefinedRate, ZeroElapsed)),
    (4, (SingleClassDataset, OneClassSample, NoConvergence)),
    (5, (BoundaryUnlearnable,)),
    (6, (InsufficientInstances,)),
    (7, (BridgeFailure,)),
)


def _exit_code(exc: BaseException) -> int:
    for code, types in _EXIT_CODES:
        if isinstance(exc, types):
            return code
    return 1


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="run config JSON")
    p.add_argument("--seed", type=int, default=None, help="override global seed")
    p.add_argument("--out", default=None, help="override output directory")
    p.add_argument("--full-scale", action="store_true",
                   help="use full-scale defaults (1M latents, 1M budget, 1h limit)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="limi",
        description="Fairness testing for tabular classifiers by latent "
                    "boundary imitation and probing.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-data", help="write the bundled census-style benchmark")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    for verb in ("fit-gen", "train-model", "approximate", "probe",
                 "baseline-random"):
        p = sub.add_parser(verb)
        _add_common(p)

    p = sub.add_parser("evaluate")
    _add_common(p)
    p.add_argument("--d-idi", required=True, help="findings CSV to evaluate")
    p.add_argument("--report-name", default="evaluation.json")

    p = sub.add_parser("retrain")
    _add_common(p)
    p.add_argument("--d-idi", required=True, help="findings CSV to retrain from")

    p = sub.add_parser("ablate-lambda")
    _add_common(p)
    p.add_argument("--lambdas", required=True,
                   help="comma-separated walk lengths, e.g. 0,0.1,0.3")
    return parser


def _make_data(args) -> dict:
    import os

    os.makedirs(args.out, exist_ok=True)
    train = census_train(seed=args.seed)
    test = census_test(seed=args.seed)
    train_path = os.path.join(args.out, "census_train.csv")
    test_path = os.path.join(args.out, "census_test.csv")
    schema_path = os.path.join(args.out, "census_schema.json")
    write_csv(train, train_path)
    write_csv(test, test_path)
    with open(schema_path, "w", encoding="utf-8") as fh:
        json.dump(census_schema().to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return {"train_csv": train_path, "test_csv": test_path, "schema": schema_path,
            "train_rows": len(train), "test_rows": len(test)}


def _load_config(args) -> pipeline.RunConfig:
    return pipeline.RunConfig.from_json(
        args.config, out_dir=args.out, seed=args.seed,
        full_scale=getattr(args, "full_scale", False),
    )


def _snapshot(args, cfg: pipeline.RunConfig) -> None:
    with open(args.config, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    doc["_resolved"] = {"seed": cfg.seed, "out_dir": cfg.out_dir}
    pipeline._write_report(cfg, "config_snapshot.json", doc)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "make-data":
            result = _make_data(args)
        else:
            cfg = _load_config(args)
            _snapshot(args, cfg)
            if args.command == "fit-gen":
                result = pipeline.cmd_fit_gen(cfg)
            elif args.command == "train-model":
                result = pipeline.cmd_train_model(cfg)
            elif args.command == "approximate":
                result = pipeline.cmd_approximate(cfg)
            elif args.command == "probe":
                result = pipeline.cmd_probe(cfg)
            elif args.command == "baseline-random":
                result = pipeline.cmd_baseline_random(cfg)
            elif args.command == "evaluate":
                result = pipeline.cmd_evaluate(cfg, args.d_idi,
                                               report_name=args.report_name)
            elif args.command == "retrain":
                result = pipeline.cmd_retrain(cfg, args.d_idi)
            elif args.command == "ablate-lambda":
                lambdas = [float(s) for s in args.lambdas.split(",") if s != ""]
                result = pipeline.cmd_ablate_lambda(cfg, lambdas)
            else:  # pragma: no cover
                raise ConfigError(f"unknown command {args.command!r}")
        json.dump(result, sys.stdout, sort_keys=True, indent=2)
        sys.stdout.write("\n")
        return 0
    except BrokenPipeError:
        return 1
    except Exception as exc:  # noqa: BLE001 - single CLI error funnel
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


if __name__ == "__main__":
    sys.exit(main())
