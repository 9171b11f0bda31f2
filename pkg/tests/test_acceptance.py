"""Acceptance gate: one test per release criterion, each printing a verdict.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. The heavyweight assets (benchmark data, generator, model, boundary,
probe and baseline outputs) are built once per session by the conftest
fixtures through the real CLI.
"""

import json
import os
import shutil
import time

import numpy as np
import pytest

from conftest import run_cli
from limi.boundary import SurrogateBoundary, boundary_auc
from limi.metrics import ann_distance, contingency_similarity, ks_complement, \
    pearson_similarity, tv_complement
from limi.probe import ProtectedHyperplane, candidates, latent_flip, project
from limi.schema import Dataset, Schema, encode_rows, load_csv


def verdict(n: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {n}: {detail}"


def test_criterion_1_geometry_suite():
    start = time.monotonic()
    rng = np.random.default_rng(2024)
    n, dim = 10_000, 8
    W = rng.standard_normal((n, dim))
    B = rng.standard_normal(n)
    Z = rng.standard_normal((n, dim)) * 3.0
    lam = rng.uniform(0.0, 1.0, n)

    norms = np.linalg.norm(W, axis=1)
    W_u = W / norms[:, None]
    B_u = B / norms

    d = (Z * W_u).sum(axis=1) + B_u
    Z0 = Z - d[:, None] * W_u
    d0 = (Z0 * W_u).sum(axis=1) + B_u

    Zp = Z0 + lam[:, None] * W_u
    Zm = Z0 - lam[:, None] * W_u
    dp = (Zp * W_u).sum(axis=1) + B_u
    dm = (Zm * W_u).sum(axis=1) + B_u

    flipped = Z - 2.0 * ((Z * W_u).sum(axis=1) + B_u)[:, None] * W_u
    restored = flipped - 2.0 * ((flipped * W_u).sum(axis=1) + B_u)[:, None] * W_u

    worst = max(
        np.abs(d0).max(),
        np.abs(dp - lam).max(),
        np.abs(dm + lam).max(),
        np.abs(restored - Z).max(),
    )
    elapsed = time.monotonic() - start

    # spot-check the same identities through the public API
    b = SurrogateBoundary(W[0], float(B[0]))
    z0 = project(b, Z[0])
    zp, zm = candidates(b, z0, 0.3)
    h = ProtectedHyperplane(W[1], float(B[1]))
    api_worst = max(
        abs(b.distance(z0)),
        abs(b.distance(zp) - 0.3),
        abs(b.distance(zm) + 0.3),
        float(np.abs(latent_flip(h, latent_flip(h, Z[1])) - Z[1]).max()),
    )

    ok = worst <= 1e-9 and api_worst <= 1e-9 and elapsed < 5.0
    verdict(1, ok, f"max residual {max(worst, api_worst):.2e} over 10,000 "
                   f"boundaries/latents in {elapsed:.2f}s")


def test_criterion_2_metric_oracle_suite():
    start = time.monotonic()
    rng = np.random.default_rng(7)
    failures = []

    def check(name, got, want):
        if abs(got - want) > 1e-12:
            failures.append(f"{name}: {got} != {want}")

    # worked examples
    check("ks worked", ks_complement([1, 2, 3, 4], [1, 2, 3, 8]), 0.75)
    check("tv worked", tv_complement(["A", "B"], ["A", "A"]), 0.5)
    check("contingency worked",
          contingency_similarity((["A", "B"], [0, 1]), (["A", "A"], [0, 0])), 0.5)
    b = SurrogateBoundary(np.array([1.0]), 0.0)
    check("auc worked",
          boundary_auc(b, np.array([[0.1], [0.4], [0.35], [0.8]]),
                       np.array([0, 0, 1, 1])), 0.75)

    # randomized small tables against brute-force implementations
    for _ in range(30):
        a = rng.integers(0, 9, rng.integers(1, 20)).tolist()
        c = rng.integers(0, 9, rng.integers(1, 20)).tolist()
        points = sorted(set(a) | set(c))
        worst = max(
            abs(sum(v <= t for v in a) / len(a) - sum(v <= t for v in c) / len(c))
            for t in points
        )
        check("ks", ks_complement(a, c), 1.0 - worst)

        cats = "pqrs"
        x = [cats[i] for i in rng.integers(0, 4, rng.integers(1, 20))]
        y = [cats[i] for i in rng.integers(0, 4, rng.integers(1, 20))]
        tvd = sum(abs(x.count(k) / len(x) - y.count(k) / len(y))
                  for k in set(x) | set(y)) / 2
        check("tv", tv_complement(x, y), 1.0 - tvd)

    for _ in range(10):
        rx = rng.random(12).tolist()
        ry = (np.asarray(rx) * rng.uniform(-2, 2) + rng.random(12)).tolist()
        sx = rng.random(12).tolist()
        sy = rng.random(12).tolist()

        def rho(u, v):
            mu, mv = sum(u) / len(u), sum(v) / len(v)
            cov = sum((a - mu) * (b - mv) for a, b in zip(u, v))
            su = sum((a - mu) ** 2 for a in u) ** 0.5
            sv = sum((b - mv) ** 2 for b in v) ** 0.5
            return cov / (su * sv)

        check("pearson", pearson_similarity((rx, ry), (sx, sy)),
              1.0 - abs(rho(rx, ry) - rho(sx, sy)) / 2.0)

    # ANN against an exhaustive scan on a 20x20 table
    schema = Schema.from_dict({
        "columns": [
            {"name": "u", "kind": "numeric", "domain": [0, 9], "protected": True},
            {"name": "v", "kind": "numeric", "domain": [0, 9]},
        ],
        "label": "y",
    })
    orig_rows = [(int(a), int(b)) for a, b in rng.integers(0, 10, (20, 2))]
    gen_rows = [(int(a), int(b)) for a, b in rng.integers(0, 10, (20, 2))]
    orig = Dataset(schema, orig_rows, np.zeros(20))
    gen = Dataset(schema, gen_rows, np.zeros(20))
    Xo = encode_rows(schema, orig_rows)
    Xg = encode_rows(schema, gen_rows)
    brute = np.mean([
        min(np.linalg.norm(g - o) for o in Xo) for g in Xg
    ])
    check("ann", ann_distance(orig, gen), float(brute))

    # AUC with ties against pairwise counting
    scores = rng.integers(-3, 4, 30).astype(float)
    labels = rng.integers(0, 2, 30)
    labels[0], labels[1] = 0, 1
    bd = SurrogateBoundary(np.array([1.0]), 0.0)
    wins, pairs = 0.0, 0
    for i in np.where(labels == 1)[0]:
        for j in np.where(labels == 0)[0]:
            pairs += 1
            wins += 1.0 if scores[i] > scores[j] else (0.5 if scores[i] == scores[j]
                                                       else 0.0)
    check("auc ties", boundary_auc(bd, scores.reshape(-1, 1), labels),
          wins / pairs)

    elapsed = time.monotonic() - start
    ok = not failures and elapsed < 5.0
    verdict(2, ok, f"{'; '.join(failures) if failures else 'all components exact'}"
                   f" in {elapsed:.2f}s")


def test_criterion_3_surrogate_fitness(bench_run):
    report = bench_run["reports"]["approximate"]
    cfg = bench_run["config"]
    ok = (report["auc_held_out"] >= 0.80
          and cfg["aux"]["n_init"] == 100_000
          and cfg["aux"]["per_class"] == 5_000)
    verdict(3, ok, f"held-out AUC {report['auc_held_out']:.4f} "
                   f"(train {report['auc_train']:.4f}, "
                   f"entire {report['auc_entire']:.4f}) at desk config")


def test_criterion_4_effectiveness(bench_run):
    probe = bench_run["reports"]["probe"]
    rand = bench_run["reports"]["baseline-random"]
    assert probe["tested"] == rand["tested"] == 30_000
    limi_yield = probe["found"] / probe["tested"]
    rand_yield = rand["found"] / rand["tested"]
    ratio = limi_yield / rand_yield if rand_yield > 0 else float("inf")
    ok = limi_yield >= 2.0 * rand_yield
    verdict(4, ok, f"unique yield/case {limi_yield:.4f} "
                   f"({probe['found']}) vs random {rand_yield:.5f} "
                   f"({rand['found']}); ratio {ratio:.1f}x")


@pytest.fixture(scope="module")
def evaluations(bench_run):
    out = {}
    for name, csv_name in (("limi", "d_idi.csv"), ("random", "d_idi_random.csv")):
        res = run_cli([
            "evaluate", "--config", bench_run["config_path"],
            "--d-idi", os.path.join(bench_run["dir"], csv_name),
            "--report-name", f"evaluation_{name}.json",
        ])
        assert res.returncode == 0, res.stderr
        out[name] = json.loads(res.stdout)
    return out


def test_criterion_5_naturalness(evaluations):
    atn_limi = evaluations["limi"]["naturalness"]["atn_mean"]
    atn_rand = evaluations["random"]["naturalness"]["atn_mean"]
    gap = atn_limi - atn_rand
    ok = gap >= 0.05
    verdict(5, ok, f"ATN {atn_limi:.4f} vs random {atn_rand:.4f} "
                   f"(gap {gap:.4f}, 10-repeat protocol)")


def test_criterion_6_lambda_ablation(bench_run):
    res = run_cli(["ablate-lambda", "--config", bench_run["config_path"],
                   "--lambdas", "0,0.3"])
    assert res.returncode == 0, res.stderr
    grid = {row["lambda"]: row for row in json.loads(res.stdout)["grid"]}
    found0, found3 = grid[0.0]["found"], grid[0.3]["found"]
    ok = found3 >= found0
    verdict(6, ok, f"found(lambda=0.3) {found3} >= found(lambda=0) {found0} "
                   f"with shared latent stream")


def test_criterion_7_retraining_direction(bench_run, tmp_path):
    # larger probe budget so 30% of the training set can be covered
    out_dir = str(tmp_path / "retrain-run")
    os.makedirs(out_dir)
    for name in ("generator.json", "model.json", "boundary.json"):
        shutil.copy(os.path.join(bench_run["dir"], name),
                    os.path.join(out_dir, name))
    doc = dict(bench_run["config"])
    doc["out_dir"] = out_dir
    doc["generator"] = {"path": os.path.join(out_dir, "generator.json")}
    doc["model"] = {"path": os.path.join(out_dir, "model.json"), "kind": "mlp"}
    doc["probe"] = {"lambda": 0.3, "budget": 160_000}
    cfg_path = str(tmp_path / "retrain-config.json")
    with open(cfg_path, "w") as fh:
        json.dump(doc, fh)

    res = run_cli(["probe", "--config", cfg_path])
    assert res.returncode == 0, res.stderr
    res = run_cli(["retrain", "--config", cfg_path,
                   "--d-idi", os.path.join(out_dir, "d_idi.csv")])
    assert res.returncode == 0, res.stderr
    report = json.loads(res.stdout)

    before = report["before"]
    after = report["after"]
    ifr_drop = before["fairness"]["if_r"] - after["fairness"]["if_r"]
    acc_drop = before["accuracy"] - after["accuracy"]
    ok = after["fairness"]["if_r"] < before["fairness"]["if_r"] and acc_drop <= 0.02
    verdict(7, ok, f"IF_r {before['fairness']['if_r']:.5f} -> "
                   f"{after['fairness']['if_r']:.5f} (drop {ifr_drop:.5f}); "
                   f"accuracy {before['accuracy']:.4f} -> {after['accuracy']:.4f} "
                   f"(drop {acc_drop:.4f})")


_TIME_FIELDS = ("elapsed_secs", "egs")


def _strip_time(doc):
    if isinstance(doc, dict):
        return {k: _strip_time(v) for k, v in doc.items() if k not in _TIME_FIELDS}
    if isinstance(doc, list):
        return [_strip_time(v) for v in doc]
    return doc


def test_criterion_8_determinism(bench_run):
    run_dir = bench_run["dir"]
    watched = ("fitness.json", "probe_stats.json", "baseline_stats.json",
               "evaluation_limi.json")
    before = {}
    for name in watched:
        with open(os.path.join(run_dir, name)) as fh:
            before[name] = json.dumps(_strip_time(json.load(fh)), sort_keys=True)

    for verb, extra in (("approximate", []), ("probe", []),
                        ("baseline-random", []),
                        ("evaluate", ["--d-idi", os.path.join(run_dir, "d_idi.csv"),
                                      "--report-name", "evaluation_limi.json"])):
        res = run_cli([verb, "--config", bench_run["config_path"], *extra])
        assert res.returncode == 0, res.stderr

    mismatches = []
    for name in watched:
        with open(os.path.join(run_dir, name)) as fh:
            again = json.dumps(_strip_time(json.load(fh)), sort_keys=True)
        if again != before[name]:
            mismatches.append(name)
    ok = not mismatches
    verdict(8, ok, "reruns byte-identical (time fields excluded) for "
                   f"{', '.join(watched)}" if ok else f"mismatch in {mismatches}")


def test_criterion_9_mlp_gradient_check(bench_assets):
    model = bench_assets["model"]
    net = model.estimator.net_
    train = bench_assets["train"]
    rng = np.random.default_rng(99)

    X = encode_rows(bench_assets["schema"],
                    [train.rows[i] for i in rng.choice(len(train), 10)])
    y = rng.integers(0, 2, 10).astype(np.float64)

    _, grad_w, grad_b = net.loss_and_grads(X, y)
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        li = int(rng.integers(0, len(net.weights)))
        flat = net.weights[li].reshape(-1)
        k = int(rng.integers(0, flat.size))
        orig = flat[k]
        flat[k] = orig + h
        up, _, _ = net.loss_and_grads(X, y)
        flat[k] = orig - h
        down, _, _ = net.loss_and_grads(X, y)
        flat[k] = orig
        numeric = (up - down) / (2 * h)
        analytic = grad_w[li].reshape(-1)[k]
        denom = max(abs(numeric), abs(analytic), 1e-8)
        worst = max(worst, abs(numeric - analytic) / denom)
    ok = worst <= 1e-4
    verdict(9, ok, f"max relative gradient error {worst:.2e} over 20 slices")
