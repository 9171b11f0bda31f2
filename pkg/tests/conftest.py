"""Shared fixtures: the bundled benchmark and one full CLI run of the pipeline.

The expensive assets (dataset, generator, trained model, boundary) are built
once per session through the actual CLI so that every test exercises the
real product surface. Desk-scale settings match the defaults.
"""

from __future__ import annotations

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from limi.datasets import census_test, census_train
from limi.generator import GaussianCopula
from limi.models import TabularModel
from limi.boundary import SurrogateBoundary
from limi.schema import Schema


def run_cli(args: list[str]) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "limi.cli", *args],
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def bench_dir(tmp_path_factory) -> str:
    """Benchmark data written once: train/test CSVs plus schema JSON."""
    out = tmp_path_factory.mktemp("bench-data")
    res = run_cli(["make-data", "--out", str(out), "--seed", "0"])
    assert res.returncode == 0, res.stderr
    return str(out)


@pytest.fixture(scope="session")
def bench_config(bench_dir, tmp_path_factory) -> str:
    """Desk-scale run config pointing at the benchmark data."""
    run_dir = tmp_path_factory.mktemp("bench-run")
    cfg = {
        "seed": 0,
        "out_dir": str(run_dir),
        "data": {
            "train_csv": os.path.join(bench_dir, "census_train.csv"),
            "test_csv": os.path.join(bench_dir, "census_test.csv"),
            "schema": os.path.join(bench_dir, "census_schema.json"),
        },
        "protected": ["sex"],
        "generator": {"path": os.path.join(str(run_dir), "generator.json")},
        "model": {"path": os.path.join(str(run_dir), "model.json"), "kind": "mlp"},
        "train": {"epochs": 100},
        "aux": {"n_init": 100000, "per_class": 5000, "epsilon": 0.7},
        "probe": {"lambda": 0.3, "budget": 30000},
        "metrics": {"if_r_n": 100000, "atn_repeats": 10, "eval_latents": 20000},
    }
    path = str(tmp_path_factory.mktemp("bench-cfg") / "config.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(cfg, fh, indent=2)
    return path


@pytest.fixture(scope="session")
def bench_run(bench_config) -> dict:
    """One full pipeline run: fit-gen, train-model, approximate, probe, baseline.

    Returns the run directory plus the parsed reports.
    """
    reports = {}
    for verb in ("fit-gen", "train-model", "approximate", "probe",
                 "baseline-random"):
        res = run_cli([verb, "--config", bench_config])
        assert res.returncode == 0, f"{verb} failed: {res.stderr}"
        reports[verb] = json.loads(res.stdout)

    with open(bench_config, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    run_dir = cfg["out_dir"]
    return {
        "config_path": bench_config,
        "config": cfg,
        "dir": run_dir,
        "reports": reports,
    }


@pytest.fixture(scope="session")
def bench_assets(bench_run):
    """In-process handles loaded from the session run's artifacts."""
    run_dir = bench_run["dir"]
    schema = Schema.from_json(bench_run["config"]["data"]["schema"])
    run_schema = schema.with_protected(["sex"])
    gen = GaussianCopula.load(os.path.join(run_dir, "generator.json"))
    gen.schema_ = run_schema
    model = TabularModel.load(os.path.join(run_dir, "model.json"))
    model.schema = run_schema
    boundary = SurrogateBoundary.load(os.path.join(run_dir, "boundary.json"))
    return {
        "schema": run_schema,
        "gen": gen,
        "model": model,
        "boundary": boundary,
        "train": census_train(seed=0),
        "test": census_test(seed=0),
    }
