"""Effectiveness, naturalness, and fairness measurement.

Naturalness compares a generated table against the original along two axes:
per-column shape (KS complement for numeric, total-variation complement for
categorical) and per-pair trend (Pearson similarity for numeric pairs,
contingency-table similarity when a categorical column is involved). Their
average is the tabular naturalness score in [0, 1].

Fairness covers both individual metrics (discriminatory-instance ratios over
a uniform domain sample and over the original dataset) and group metrics
(statistical parity difference, average odds difference).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import runtime
from .errors import (
    ConstantColumn,
    EmptyGroup,
    EmptySample,
    UndefinedRate,
    ZeroElapsed,
)
from .probe import discriminatory_scan
from .schema import (
    CATEGORICAL,
    NUMERIC,
    Dataset,
    Row,
    Schema,
    encode_rows,
    sample_uniform,
)


def ks_complement(real_col, syn_col) -> float:
    """1 minus the two-sample KS statistic over the union of sample points."""
    real = np.asarray(real_col, dtype=np.float64)
    syn = np.asarray(syn_col, dtype=np.float64)
    if real.size == 0 or syn.size == 0:
        raise EmptySample("ks_complement needs non-empty samples")
    real_sorted = np.sort(real)
    syn_sorted = np.sort(syn)
    points = np.concatenate([real_sorted, syn_sorted])
    cdf_real = np.searchsorted(real_sorted, points, side="right") / real.size
    cdf_syn = np.searchsorted(syn_sorted, points, side="right") / syn.size
    return 1.0 - float(np.abs(cdf_real - cdf_syn).max())


def tv_complement(real_col, syn_col) -> float:
    """1 minus half the L1 distance between category frequency tables."""
    real = list(real_col)
    syn = list(syn_col)
    if not real or not syn:
        raise EmptySample("tv_complement needs non-empty samples")
    real_counts = Counter(real)
    syn_counts = Counter(syn)
    categories = set(real_counts) | set(syn_counts)
    total = sum(
        abs(real_counts[c] / len(real) - syn_counts[c] / len(syn))
        for c in categories
    )
    return 1.0 - 0.5 * total


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise ConstantColumn("correlation undefined for a constant column")
    return float(np.corrcoef(x, y)[0, 1])


def pearson_similarity(real_pair, syn_pair) -> float:
    """1 - |rho_real - rho_syn| / 2 for a pair of numeric columns."""
    rx, ry = (np.asarray(c, dtype=np.float64) for c in real_pair)
    sx, sy = (np.asarray(c, dtype=np.float64) for c in syn_pair)
    if rx.size < 2 or sx.size < 2:
        raise EmptySample("pearson_similarity needs at least two rows")
    return 1.0 - abs(_pearson(rx, ry) - _pearson(sx, sy)) / 2.0


def _bin_numeric(values: np.ndarray, lo: float, hi: float, bins: int = 10) -> np.ndarray:
    # equal-width bins over the real-data range; out-of-range clamps to edge bins
    if hi <= lo:
        return np.zeros(len(values), dtype=np.int64)
    idx = np.floor((np.asarray(values, dtype=np.float64) - lo) / (hi - lo) * bins)
    return np.clip(idx, 0, bins - 1).astype(np.int64)


def contingency_similarity(real_pair, syn_pair,
                           numeric=(False, False)) -> float:
    """1 minus half the L1 distance between joint category distributions.

    Numeric members are discretised into 10 equal-width bins over the
    real-data range before comparing.
    """
    real_a, real_b = real_pair
    syn_a, syn_b = syn_pair
    if len(real_a) == 0 or len(syn_a) == 0:
        raise EmptySample("contingency_similarity needs non-empty samples")

    def codes(real_col, syn_col, is_numeric):
        """Integer codes over the union of observed values (or numeric bins)."""
        if is_numeric:
            real_col = np.asarray(real_col, dtype=np.float64)
            lo, hi = float(real_col.min()), float(real_col.max())
            r = _bin_numeric(real_col, lo, hi)
            s = _bin_numeric(np.asarray(syn_col, dtype=np.float64), lo, hi)
            return r, s, 10
        index: dict = {}
        for v in real_col:
            index.setdefault(v, len(index))
        for v in syn_col:
            index.setdefault(v, len(index))
        r = np.fromiter((index[v] for v in real_col), dtype=np.int64,
                        count=len(real_col))
        s = np.fromiter((index[v] for v in syn_col), dtype=np.int64,
                        count=len(syn_col))
        return r, s, len(index)

    ra, sa, _ = codes(real_a, syn_a, numeric[0])
    rb, sb, kb = codes(real_b, syn_b, numeric[1])

    real_cells = ra * kb + rb
    syn_cells = sa * kb + sb
    size = int(max(real_cells.max(), syn_cells.max())) + 1
    real_freq = np.bincount(real_cells, minlength=size) / len(real_cells)
    syn_freq = np.bincount(syn_cells, minlength=size) / len(syn_cells)
    return 1.0 - 0.5 * float(np.abs(real_freq - syn_freq).sum())


@dataclass(frozen=True)
class NaturalnessReport:
    shape_scores: dict
    trend_scores: dict
    shape_mean: float
    trend_mean: float
    atn: float

    def to_dict(self) -> dict:
        return {
            "shape_scores": self.shape_scores,
            "trend_scores": self.trend_scores,
            "shape_mean": self.shape_mean,
            "trend_mean": self.trend_mean,
            "atn": self.atn,
        }


def atn(generated: Dataset, original: Dataset) -> NaturalnessReport:
    """Average tabular naturalness of generated rows against the original.

    Shape term: mean per-column similarity. Trend term: mean over unordered
    column pairs (Pearson for numeric-numeric, contingency otherwise). The
    score is the average of the two means.
    """
    schema = original.schema
    if len(generated) == 0 or len(original) == 0:
        raise EmptySample("atn needs non-empty datasets")

    def column(ds: Dataset, j: int) -> list:
        return [row[j] for row in ds.rows]

    shape_scores: dict = {}
    for j, col in enumerate(schema.columns):
        real = column(original, j)
        syn = column(generated, j)
        if col.kind == NUMERIC:
            shape_scores[col.name] = ks_complement(real, syn)
        else:
            shape_scores[col.name] = tv_complement(real, syn)

    trend_scores: dict = {}
    for a in range(schema.n_columns):
        for b in range(a + 1, schema.n_columns):
            ca, cb = schema.columns[a], schema.columns[b]
            key = f"{ca.name}|{cb.name}"
            real_pair = (column(original, a), column(original, b))
            syn_pair = (column(generated, a), column(generated, b))
            if ca.kind == NUMERIC and cb.kind == NUMERIC:
                trend_scores[key] = pearson_similarity(real_pair, syn_pair)
            else:
                trend_scores[key] = contingency_similarity(
                    real_pair, syn_pair,
                    numeric=(ca.kind == NUMERIC, cb.kind == NUMERIC),
                )

    shape_mean = float(np.mean(list(shape_scores.values())))
    if trend_scores:
        trend_mean = float(np.mean(list(trend_scores.values())))
        score = (shape_mean + trend_mean) / 2.0
    else:
        # single-column schema has no pairs; the shape term stands alone
        trend_mean = shape_mean
        score = shape_mean
    return NaturalnessReport(shape_scores, trend_scores, shape_mean, trend_mean, score)


def atn_protocol(generated_rows: list[Row], original: Dataset,
                 repeats: int = 10, seed: int = 0) -> tuple[float, NaturalnessReport]:
    """Mean naturalness over seeded subsamples of the generated set.

    Each repeat draws |original| rows from the generated set (without
    replacement when possible) and scores them against the full original.
    Returns the mean score and the last repeat's full report.
    """
    if not generated_rows:
        raise EmptySample("no generated rows to evaluate")
    rng = np.random.default_rng(runtime.stage_seed(seed, runtime.ATN_SUBSAMPLE))
    n = len(original)
    values = []
    report = None
    for _ in range(repeats):
        replace_draw = len(generated_rows) < n
        idx = rng.choice(len(generated_rows), size=n, replace=replace_draw)
        sample = Dataset(
            original.schema,
            [generated_rows[i] for i in idx],
            np.zeros(n, dtype=np.int64),
            validate=False,
        )
        report = atn(sample, original)
        values.append(report.atn)
    return float(np.mean(values)), report


def ann_distance(original: Dataset, generated: Dataset) -> float:
    """Mean distance from each generated row to its nearest original row (encoded space)."""
    if len(original) == 0 or len(generated) == 0:
        raise EmptySample("ann_distance needs non-empty datasets")
    X_orig = encode_rows(original.schema, original.rows)
    X_gen = encode_rows(original.schema, generated.rows)
    tree = cKDTree(X_orig)
    dists, _ = tree.query(X_gen, k=1)
    return float(np.mean(dists))


def egs(found: int, elapsed_secs: float) -> float:
    """Discriminatory instances found per second."""
    if elapsed_secs <= 0:
        raise ZeroElapsed("elapsed time must be positive")
    return found / elapsed_secs


def if_r(model, schema: Schema, n: int = 100_000, seed: int = 0) -> float:
    """Discriminatory ratio over a uniform random sample of the input domain."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rows = sample_uniform(schema, n, runtime.stage_seed(seed, runtime.IFR_SAMPLE))
    hits = sum(1 for p in discriminatory_scan(model, schema, rows) if p is not None)
    return hits / n


def if_o(model, dataset: Dataset) -> float:
    """Discriminatory ratio over the rows of the original dataset."""
    if len(dataset) == 0:
        raise EmptySample("if_o needs a non-empty dataset")
    hits = sum(
        1 for p in discriminatory_scan(model, dataset.schema, dataset.rows)
        if p is not None
    )
    return hits / len(dataset)


def _group_masks(dataset: Dataset, schema: Schema, protected_col: str):
    col = schema.column(protected_col)
    j = schema.column_index(protected_col)
    privileged_values = set(col.privileged_values)
    priv = np.array([row[j] in privileged_values for row in dataset.rows])
    unpriv = ~priv
    if priv.sum() == 0 or unpriv.sum() == 0:
        raise EmptyGroup(f"column {protected_col!r}: a group is empty")
    return priv, unpriv


def spd(model, dataset: Dataset, schema: Schema, protected_col: str) -> float:
    """|P(favorable | unprivileged) - P(favorable | privileged)|."""
    priv, unpriv = _group_masks(dataset, schema, protected_col)
    labels, _ = model.predict_batch(dataset.rows)
    fav = labels == schema.favorable_label
    return float(abs(fav[unpriv].mean() - fav[priv].mean()))


def aod(model, dataset: Dataset, schema: Schema, protected_col: str) -> float:
    """Mean of absolute TPR and FPR gaps between the two groups."""
    priv, unpriv = _group_masks(dataset, schema, protected_col)
    labels, _ = model.predict_batch(dataset.rows)
    pred_fav = labels == schema.favorable_label
    true_fav = dataset.labels == schema.favorable_label

    def rates(mask):
        pos = mask & true_fav
        neg = mask & ~true_fav
        if pos.sum() == 0 or neg.sum() == 0:
            raise UndefinedRate(
                f"column {protected_col!r}: a group lacks positives or negatives"
            )
        return pred_fav[pos].mean(), pred_fav[neg].mean()

    tpr_p, fpr_p = rates(priv)
    tpr_u, fpr_u = rates(unpriv)
    return float(0.5 * (abs(fpr_u - fpr_p) + abs(tpr_u - tpr_p)))


@dataclass(frozen=True)
class FairnessReport:
    if_r: float
    if_o: float
    spd: float
    aod: float
    group_counts: dict = field(default_factory=dict)
    tpr: dict = field(default_factory=dict)
    fpr: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "if_r": self.if_r,
            "if_o": self.if_o,
            "spd": self.spd,
            "aod": self.aod,
            "group_counts": self.group_counts,
            "tpr": self.tpr,
            "fpr": self.fpr,
        }


def fairness_report(model, dataset: Dataset, schema: Schema, protected_col: str,
                    if_r_n: int = 100_000, seed: int = 0) -> FairnessReport:
    """All four fairness metrics plus per-group rates in one report."""
    priv, unpriv = _group_masks(dataset, schema, protected_col)
    labels, _ = model.predict_batch(dataset.rows)
    pred_fav = labels == schema.favorable_label
    true_fav = dataset.labels == schema.favorable_label

    def safe_rates(mask):
        pos = mask & true_fav
        neg = mask & ~true_fav
        tpr = float(pred_fav[pos].mean()) if pos.sum() else float("nan")
        fpr = float(pred_fav[neg].mean()) if neg.sum() else float("nan")
        return tpr, fpr

    tpr_p, fpr_p = safe_rates(priv)
    tpr_u, fpr_u = safe_rates(unpriv)
    return FairnessReport(
        if_r=if_r(model, schema, if_r_n, seed),
        if_o=if_o(model, dataset),
        spd=spd(model, dataset, schema, protected_col),
        aod=aod(model, dataset, schema, protected_col),
        group_counts={"privileged": int(priv.sum()), "unprivileged": int(unpriv.sum())},
        tpr={"privileged": tpr_p, "unprivileged": tpr_u},
        fpr={"privileged": fpr_p, "unprivileged": fpr_u},
    )
