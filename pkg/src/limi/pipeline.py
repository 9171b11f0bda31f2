"""End-to-end orchestration: reproducible runs driven by one JSON config.

Every command reads a RunConfig, derives all stage seeds from the single
global seed, and writes its outputs (plus a config snapshot) into the run
directory. Reports are JSON with sorted keys; rerunning a command with the
same config and seed reproduces them byte for byte, except for the
explicitly time-dependent fields (elapsed_secs, egs).
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from . import runtime
from .boundary import (
    AuxConfig,
    SurrogateBoundary,
    SvmConfig,
    boundary_auc,
    build_aux,
    fit_boundary,
    label_latents,
)
from .bridge import BridgeGenerator, BridgeModel
from .errors import ConfigError, InsufficientInstances, LimiError
from .generator import GaussianCopula, fit_copula, sample_latents
from .metrics import (
    ann_distance,
    atn,
    atn_protocol,
    fairness_report,
)
from .models import MlpConfig, TabularModel, train_logreg, train_mlp
from .probe import DiscriminatoryPair, ProbeConfig, ProbeStats, random_baseline, run
from .schema import Dataset, Row, Schema, encode_rows, load_csv

FULL_SCALE = {
    "aux_n_init": 1_000_000,
    "aux_per_class": 50_000,
    "probe_budget": 1_000_000,
    "probe_time_limit": 3600.0,
    "train_epochs": 1000,
}


@dataclass(frozen=True)
class RetrainConfig:
    fraction: float = 0.30
    knn_k: int = 5
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.fraction <= 1.0:
            raise ConfigError("retrain fraction must lie in (0, 1]")
        if self.knn_k < 1:
            raise ConfigError("knn_k must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    """Everything one run needs; loadable from a JSON document."""

    train_csv: str
    schema_json: str
    out_dir: str
    test_csv: str | None = None
    protected: tuple[str, ...] = ()
    seed: int = 0
    model_kind: str = "mlp"
    model_path: str | None = None
    model_command: tuple[str, ...] | None = None
    generator_path: str | None = None
    generator_command: tuple[str, ...] | None = None
    train: MlpConfig = field(default_factory=MlpConfig)
    aux: AuxConfig = field(default_factory=AuxConfig)
    svm: SvmConfig = field(default_factory=SvmConfig)
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    retrain: RetrainConfig = field(default_factory=RetrainConfig)
    if_r_n: int = 100_000
    atn_repeats: int = 10
    eval_latents: int = 20_000

    @classmethod
    def from_dict(cls, doc: dict, out_dir: str | None = None,
                  seed: int | None = None, full_scale: bool = False) -> "RunConfig":
        try:
            data = doc["data"]
            cfg_seed = int(doc.get("seed", 0)) if seed is None else int(seed)
            train_doc = dict(doc.get("train", {}))
            aux_doc = dict(doc.get("aux", {}))
            svm_doc = dict(doc.get("svm", {}))
            probe_doc = dict(doc.get("probe", {}))
            retrain_doc = dict(doc.get("retrain", {}))
            metrics_doc = dict(doc.get("metrics", {}))
            if full_scale:
                aux_doc.setdefault("n_init", FULL_SCALE["aux_n_init"])
                aux_doc.setdefault("per_class", FULL_SCALE["aux_per_class"])
                probe_doc.setdefault("budget", FULL_SCALE["probe_budget"])
                probe_doc.setdefault("time_limit_secs", FULL_SCALE["probe_time_limit"])
                train_doc.setdefault("epochs", FULL_SCALE["train_epochs"])

            model_doc = dict(doc.get("model", {}))
            gen_doc = dict(doc.get("generator", {}))
            return cls(
                train_csv=data["train_csv"],
                test_csv=data.get("test_csv"),
                schema_json=data["schema"],
                out_dir=out_dir if out_dir is not None else doc.get("out_dir", "run"),
                protected=tuple(doc.get("protected", ())),
                seed=cfg_seed,
                model_kind=model_doc.get("kind", "mlp"),
                model_path=model_doc.get("path"),
                model_command=(tuple(model_doc["command"])
                               if "command" in model_doc else None),
                generator_path=gen_doc.get("path"),
                generator_command=(tuple(gen_doc["command"])
                                   if "command" in gen_doc else None),
                train=MlpConfig(
                    hidden_sizes=tuple(train_doc.get("hidden_sizes",
                                                     (64, 32, 16, 8, 4))),
                    learning_rate=float(train_doc.get("learning_rate", 0.001)),
                    epochs=int(train_doc.get("epochs", 100)),
                    batch_size=int(train_doc.get("batch_size", 128)),
                    seed=cfg_seed,
                ),
                aux=AuxConfig(
                    n_init=int(aux_doc.get("n_init", 100_000)),
                    epsilon=float(aux_doc.get("epsilon", 0.7)),
                    per_class=int(aux_doc.get("per_class", 5_000)),
                    seed=cfg_seed,
                ),
                svm=SvmConfig(
                    reg=float(svm_doc.get("reg", 1e-4)),
                    epochs=int(svm_doc.get("epochs", 20)),
                    seed=cfg_seed,
                ),
                probe=ProbeConfig(
                    lam=float(probe_doc.get("lambda", 0.3)),
                    budget=int(probe_doc.get("budget", 30_000)),
                    time_limit_secs=probe_doc.get("time_limit_secs"),
                    dedup=bool(probe_doc.get("dedup", True)),
                    seed=cfg_seed,
                    reuse_aux_seed=(cfg_seed if probe_doc.get("reuse_init") else None),
                ),
                retrain=RetrainConfig(
                    fraction=float(retrain_doc.get("fraction", 0.30)),
                    knn_k=int(retrain_doc.get("knn_k", 5)),
                    seed=cfg_seed,
                ),
                if_r_n=int(metrics_doc.get("if_r_n", 100_000)),
                atn_repeats=int(metrics_doc.get("atn_repeats", 10)),
                eval_latents=int(metrics_doc.get("eval_latents", 20_000)),
            )
        except KeyError as exc:
            raise ConfigError(f"config missing key {exc}") from exc

    @classmethod
    def from_json(cls, path: str, **kwargs) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh), **kwargs)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def _write_report(cfg: RunConfig, name: str, payload: dict) -> str:
    path = _out_path(cfg, name)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _snapshot_config(cfg: RunConfig, doc_source: dict | None = None) -> None:
    payload = doc_source if doc_source is not None else {"derived_from": "RunConfig"}
    _write_report(cfg, "config_snapshot.json", payload)


def load_schema_for_run(cfg: RunConfig) -> Schema:
    schema = Schema.from_json(cfg.schema_json)
    if cfg.protected:
        schema = schema.with_protected(list(cfg.protected))
    return schema


def load_train(cfg: RunConfig, schema: Schema) -> Dataset:
    return load_csv(cfg.train_csv, schema)


def load_eval_dataset(cfg: RunConfig, schema: Schema) -> Dataset:
    if cfg.test_csv:
        return load_csv(cfg.test_csv, schema)
    return load_csv(cfg.train_csv, schema)


def open_generator(cfg: RunConfig, schema: Schema):
    if cfg.generator_command:
        return BridgeGenerator(list(cfg.generator_command), schema)
    if not cfg.generator_path:
        raise ConfigError("config has neither generator.path nor generator.command")
    gen = GaussianCopula.load(cfg.generator_path)
    gen.schema_ = schema  # run-level protected flags
    return gen


def open_model(cfg: RunConfig, schema: Schema):
    if cfg.model_command:
        return BridgeModel(list(cfg.model_command), schema)
    if not cfg.model_path:
        raise ConfigError("config has neither model.path nor model.command")
    model = TabularModel.load(cfg.model_path)
    model.schema = schema
    return model


def cmd_fit_gen(cfg: RunConfig) -> dict:
    """Fit the copula generator, persist it, and report decode calibration."""
    schema = load_schema_for_run(cfg)
    train = load_train(cfg, schema)
    gen = fit_copula(train, seed=cfg.seed)
    gen_path = _out_path(cfg, "generator.json")
    gen.save(gen_path)

    calibration_rows = gen.sample_rows(
        min(10_000, max(1000, len(train))),
        runtime.stage_seed(cfg.seed, runtime.EVAL_LATENTS),
    )
    sample = Dataset(schema, calibration_rows,
                     np.zeros(len(calibration_rows), dtype=np.int64), validate=False)
    report = {
        "generator_file": gen_path,
        "latent_dim": gen.latent_dim,
        "calibration_atn": atn(sample, train).atn,
        "rows_fit": len(train),
    }
    _write_report(cfg, "fit_gen_report.json", report)
    return report


def cmd_train_model(cfg: RunConfig) -> dict:
    """Train a built-in classifier and persist its parameter dump."""
    schema = load_schema_for_run(cfg)
    train = load_train(cfg, schema)
    if cfg.model_kind == "logreg":
        model = train_logreg(train, epochs=cfg.train.epochs,
                             lr=cfg.train.learning_rate, seed=cfg.seed)
    elif cfg.model_kind == "mlp":
        model = train_mlp(train, cfg.train)
    else:
        raise ConfigError(f"unknown model kind {cfg.model_kind!r}")
    model.schema = schema
    model_path = _out_path(cfg, "model.json")
    model.save(model_path)

    report = {
        "model_file": model_path,
        "kind": cfg.model_kind,
        "train_accuracy": model.estimator.train_accuracy_,
    }
    if cfg.test_csv:
        report["test_accuracy"] = model.accuracy(load_csv(cfg.test_csv, schema))
    _write_report(cfg, "train_report.json", report)
    return report


def cmd_approximate(cfg: RunConfig) -> dict:
    """Build the auxiliary latent dataset, fit the surrogate, report fitness."""
    schema = load_schema_for_run(cfg)
    gen = open_generator(cfg, schema)
    model = open_model(cfg, schema)

    aux = build_aux(gen, model, cfg.aux)
    boundary = fit_boundary(aux, cfg.svm)
    boundary_path = _out_path(cfg, "boundary.json")
    boundary.save(boundary_path)

    Z_eval = sample_latents(cfg.eval_latents, gen.latent_dim,
                            runtime.stage_seed(cfg.seed, runtime.EVAL_LATENTS))
    labels, _ = label_latents(gen, model, Z_eval)
    split = int(0.9 * len(Z_eval))
    report = {
        "boundary_file": boundary_path,
        "auc_train": boundary_auc(boundary, aux.latents, aux.labels),
        "auc_entire": boundary_auc(boundary, Z_eval[:split], labels[:split]),
        "auc_held_out": boundary_auc(boundary, Z_eval[split:], labels[split:]),
        "eval_latents": int(len(Z_eval)),
    }
    _write_report(cfg, "fitness.json", report)
    return report


_PAIR_EXTRA = ("__x_score", "__variant_label", "__variant_score", "__source")


def write_pairs_csv(path: str, schema: Schema,
                    pairs: list[DiscriminatoryPair]) -> None:
    """Pairs as CSV: the instance (readable back by load_csv), its variant, tags.

    The label column carries the model's predicted label for the instance, so
    the file round-trips through load_csv as a labelled dataset.
    """
    names = schema.column_names()
    header = (names + [schema.label_name]
              + [f"variant__{n}" for n in names] + list(_PAIR_EXTRA))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for p in pairs:
            pred, vpred = p.predictions
            writer.writerow(
                [_cell(v) for v in p.x] + [pred.label]
                + [_cell(v) for v in p.x_variant]
                + [repr(pred.score), vpred.label, repr(vpred.score), p.source]
            )


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def read_pairs_rows(path: str, schema: Schema) -> Dataset:
    """The instance side of a pairs CSV, labelled by the model's predictions."""
    return load_csv(path, schema)


def _stats_payload(stats: ProbeStats) -> dict:
    return {
        "tested": stats.tested,
        "found": stats.found,
        "found_raw": stats.found_raw,
        "elapsed_secs": stats.elapsed_secs,
        "egs": stats.egs,
    }


def cmd_probe(cfg: RunConfig) -> dict:
    """Run the boundary-probing search and export findings plus stats."""
    schema = load_schema_for_run(cfg)
    gen = open_generator(cfg, schema)
    model = open_model(cfg, schema)
    boundary = SurrogateBoundary.load(_out_path(cfg, "boundary.json"))

    pairs, stats = run(gen, model, boundary, schema, cfg.probe)
    write_pairs_csv(_out_path(cfg, "d_idi.csv"), schema, pairs)
    payload = _stats_payload(stats)
    _write_report(cfg, "probe_stats.json", payload)
    return payload


def cmd_baseline_random(cfg: RunConfig) -> dict:
    """Uniform-random search under the same budget accounting."""
    schema = load_schema_for_run(cfg)
    model = open_model(cfg, schema)
    pairs, stats = random_baseline(model, schema, cfg.probe)
    write_pairs_csv(_out_path(cfg, "d_idi_random.csv"), schema, pairs)
    payload = _stats_payload(stats)
    _write_report(cfg, "baseline_stats.json", payload)
    return payload


def cmd_evaluate(cfg: RunConfig, d_idi_path: str,
                 report_name: str = "evaluation.json") -> dict:
    """Naturalness and fairness evaluation of a findings file."""
    schema = load_schema_for_run(cfg)
    train = load_train(cfg, schema)
    eval_ds = load_eval_dataset(cfg, schema)
    model = open_model(cfg, schema)
    found = read_pairs_rows(d_idi_path, schema)

    protected_col = schema.protected_indices()[0]
    protected_name = schema.columns[protected_col].name

    atn_mean, last_report = atn_protocol(found.rows, train,
                                         repeats=cfg.atn_repeats, seed=cfg.seed)
    fairness = fairness_report(model, eval_ds, schema, protected_name,
                               if_r_n=cfg.if_r_n, seed=cfg.seed)
    payload = {
        "d_idi_file": d_idi_path,
        "n_instances": len(found),
        "naturalness": {
            "atn_mean": atn_mean,
            "repeats": cfg.atn_repeats,
            "last_sample": last_report.to_dict(),
            "ann_distance": ann_distance(train, found),
        },
        "fairness": fairness.to_dict(),
        "accuracy": (model.accuracy(eval_ds)
                     if isinstance(model, TabularModel) else None),
        "protected": protected_name,
    }
    _write_report(cfg, report_name, payload)
    return payload


def knn_majority_labels(train: Dataset, rows: list[Row], k: int,
                        schema: Schema) -> np.ndarray:
    """Label rows by majority vote of their k nearest training rows (encoded space).

    Ties resolve to the favorable label.
    """
    tree = cKDTree(encode_rows(schema, train.rows))
    _, idx = tree.query(encode_rows(schema, rows), k=k)
    votes = train.labels[np.atleast_2d(idx)]
    means = votes.mean(axis=1)
    labels = np.where(means > 0.5, 1, 0).astype(np.int64)
    labels[means == 0.5] = schema.favorable_label
    return labels


def cmd_retrain(cfg: RunConfig, d_idi_path: str) -> dict:
    """Augment the training set with found instances and retrain from scratch.

    The generated instances carry no ground-truth labels; they are labelled
    by k-nearest-neighbour majority vote over the original training rows.
    This labelling rule is a toolkit convention, not part of the probing
    method, and is recorded in the report.
    """
    schema = load_schema_for_run(cfg)
    train = load_train(cfg, schema)
    eval_ds = load_eval_dataset(cfg, schema)
    model = open_model(cfg, schema)
    found = read_pairs_rows(d_idi_path, schema)

    required = int(cfg.retrain.fraction * len(train))
    unique_rows = list(dict.fromkeys(found.rows))
    if len(unique_rows) < required:
        raise InsufficientInstances(len(unique_rows), required)
    rng = np.random.default_rng(runtime.stage_seed(cfg.seed, runtime.RETRAIN_PICK))
    pick = rng.choice(len(unique_rows), size=required, replace=False)
    selected = [unique_rows[i] for i in pick]

    labels = knn_majority_labels(train, selected, cfg.retrain.knn_k, schema)
    augment = Dataset(schema, selected, labels, validate=False)

    retrained = train_mlp(train.concat(augment), cfg.train)
    retrained.schema = schema
    retrained_path = _out_path(cfg, "model_retrained.json")
    retrained.save(retrained_path)

    protected_name = schema.columns[schema.protected_indices()[0]].name

    def snapshot(m) -> dict:
        rep = fairness_report(m, eval_ds, schema, protected_name,
                              if_r_n=cfg.if_r_n, seed=cfg.seed)
        return {"fairness": rep.to_dict(), "accuracy": m.accuracy(eval_ds)}

    payload = {
        "retrained_model_file": retrained_path,
        "augment_size": required,
        "label_rule": f"knn-majority (k={cfg.retrain.knn_k}, ties favor "
                      f"label {schema.favorable_label}); toolkit convention",
        "before": snapshot(model),
        "after": snapshot(retrained),
    }
    _write_report(cfg, "retrain_report.json", payload)
    return payload


def cmd_ablate_lambda(cfg: RunConfig, lambdas: list[float]) -> dict:
    """Probe once per walk length with shared seeds and tabulate the yields."""
    if not lambdas:
        raise ConfigError("lambda grid is empty")
    schema = load_schema_for_run(cfg)
    gen = open_generator(cfg, schema)
    model = open_model(cfg, schema)
    boundary = SurrogateBoundary.load(_out_path(cfg, "boundary.json"))

    table = []
    for lam in lambdas:
        probe_cfg = replace(cfg.probe, lam=float(lam))
        _, stats = run(gen, model, boundary, schema, probe_cfg)
        table.append({"lambda": float(lam), **_stats_payload(stats)})
    payload = {"grid": table}
    _write_report(cfg, "ablation.json", payload)
    return payload
