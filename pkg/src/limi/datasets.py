"""Bundled census-style benchmark data.

Synthesizes an income-prediction table shaped like the classic 13-attribute
census benchmark: 5 binned numeric and 8 categorical columns, gender/race/age
flagged as protected, ~26% favorable labels, and train/test splits of 32,561
and 16,281 rows. Everything is deterministic per seed and fully offline.

The label follows a conjunctive story: a favorable outcome needs decent
education AND prime working age AND near-full-time hours AND (usually)
marriage, attenuated by foreign birth, capital losses, and marginal work
arrangements, with capital gains as a boost and a deliberate gender effect.
The multiplicative structure keeps models trained on this data confidently
negative across most of the raw input domain, as observed on the real
benchmark, while leaving a genuine decision band for fairness probing.
"""

from __future__ import annotations

import numpy as np

from .normals import norm_cdf
from .schema import ColumnSpec, Dataset, Schema

TRAIN_ROWS = 32_561
TEST_ROWS = 16_281

_EDUCATION = (
    "preschool", "1st-4th", "5th-6th", "7th-8th", "9th", "10th", "11th",
    "12th", "hs-grad", "some-college", "assoc-voc", "assoc-acdm",
    "bachelors", "masters", "prof-school", "doctorate",
)
_EDU_PROBS = np.array([
    0.002, 0.005, 0.010, 0.020, 0.016, 0.029, 0.037, 0.013,
    0.322, 0.223, 0.042, 0.033, 0.164, 0.054, 0.018, 0.012,
])
_WORKCLASS = (
    "federal-gov", "local-gov", "never-worked", "private",
    "self-emp-inc", "self-emp-not-inc", "state-gov", "without-pay",
)
_WORKCLASS_PROBS = np.array([0.029, 0.064, 0.0005, 0.735, 0.035, 0.080, 0.055, 0.0015])
# ordered by association with income so the ordinal encoding is monotone
_MARITAL = (
    "never-married", "separated", "married-spouse-absent",
    "divorced", "widowed", "married-af-spouse", "married-civ-spouse",
)
_RELATIONSHIP = (
    "husband", "not-in-family", "other-relative", "own-child", "unmarried", "wife",
)
_OCCUPATION = (
    "priv-house-serv", "other-service", "handlers-cleaners", "farming-fishing",
    "machine-op-inspct", "transport-moving", "armed-forces", "craft-repair",
    "adm-clerical", "protective-serv", "sales", "tech-support",
    "exec-managerial", "prof-specialty",
)
_OCC_LOW = np.array([0.01, 0.16, 0.08, 0.05, 0.11, 0.128, 0.002, 0.16,
                     0.11, 0.02, 0.09, 0.02, 0.04, 0.02])
_OCC_HIGH = np.array([0.002, 0.03, 0.01, 0.01, 0.02, 0.006, 0.002, 0.04,
                      0.10, 0.02, 0.14, 0.08, 0.24, 0.30])
_RACE = ("amer-indian-eskimo", "asian-pac-islander", "black", "other", "white")
_RACE_PROBS = np.array([0.010, 0.031, 0.096, 0.008, 0.855])
_SEX = ("female", "male")
_COUNTRIES = ("united-states", "mexico") + tuple(f"country-{i:02d}" for i in range(38))


def census_schema() -> Schema:
    columns = (
        ColumnSpec("age", "numeric", (1, 9), protected=True,
                   privileged_values=(4, 5, 6, 7, 8, 9)),
        ColumnSpec("workclass", "categorical", _WORKCLASS),
        ColumnSpec("fnlwgt", "numeric", (0, 39)),
        ColumnSpec("education", "categorical", _EDUCATION),
        ColumnSpec("marital_status", "categorical", _MARITAL),
        ColumnSpec("occupation", "categorical", _OCCUPATION),
        ColumnSpec("relationship", "categorical", _RELATIONSHIP),
        ColumnSpec("race", "categorical", _RACE, protected=True,
                   privileged_values=("white",)),
        ColumnSpec("sex", "categorical", _SEX, protected=True,
                   privileged_values=("male",)),
        ColumnSpec("capital_gain", "numeric", (0, 99)),
        ColumnSpec("capital_loss", "numeric", (0, 39)),
        ColumnSpec("hours_per_week", "numeric", (1, 99)),
        ColumnSpec("native_country", "categorical", _COUNTRIES),
    )
    return Schema(columns, label_name="income", favorable_label=1)


def _weighted_rows(rng, weights: np.ndarray) -> np.ndarray:
    """One categorical draw per row with row-specific weights."""
    cum = np.cumsum(weights, axis=1)
    u = rng.random(weights.shape[0]) * cum[:, -1]
    return (u[:, None] >= cum).sum(axis=1)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


def synth_census(n: int, seed: int = 0) -> Dataset:
    """Generate n rows of the census-style benchmark, deterministic per seed."""
    schema = census_schema()
    rng = np.random.default_rng([seed, 101])

    t_age = rng.standard_normal(n)
    age_years = np.clip(38.6 + 13.6 * t_age, 17, 90)
    age_bin = np.floor(age_years / 10).astype(np.int64)

    male = rng.random(n) < 0.669
    sex = np.where(male, "male", "female")

    t_edu = 0.18 * t_age + np.sqrt(1 - 0.18**2) * rng.standard_normal(n)
    edu_cum = np.cumsum(_EDU_PROBS / _EDU_PROBS.sum())
    edu_idx = np.minimum(
        np.searchsorted(edu_cum, norm_cdf(t_edu), side="right"),
        len(_EDUCATION) - 1,
    )
    edu_frac = edu_idx / (len(_EDUCATION) - 1)

    p_married = np.clip(0.85 * norm_cdf((age_years - 29.0) / 8.0), 0.0, 0.85)
    married = rng.random(n) < p_married
    marital_idx = np.empty(n, dtype=np.int64)
    u = rng.random(n)
    marital_idx[married] = np.select(
        [u[married] < 0.955, u[married] < 0.962], [6, 5], default=2
    )
    p_never = _sigmoid((33.0 - age_years) / 6.0)
    nm = ~married
    u2 = rng.random(n)
    never = nm & (u2 < p_never)
    marital_idx[never] = 0
    rest = nm & ~never
    u3 = rng.random(n)
    marital_idx[rest] = np.select(
        [u3[rest] < 0.58, u3[rest] < 0.78], [3, 1], default=4
    )

    rel_idx = np.empty(n, dtype=np.int64)
    u4 = rng.random(n)
    rel_idx[married & male] = np.where(u4[married & male] < 0.97, 0, 1)
    rel_idx[married & ~male] = np.where(u4[married & ~male] < 0.93, 5, 1)
    single = ~married
    p_child = _sigmoid((24.0 - age_years) / 4.0)
    child = single & (u4 < p_child)
    rel_idx[child] = 3
    loose = single & ~child
    u5 = rng.random(n)
    rel_idx[loose] = np.select(
        [u5[loose] < 0.55, u5[loose] < 0.85], [1, 4], default=2
    )

    occ_weights = (1.0 - edu_frac[:, None]) * _OCC_LOW + edu_frac[:, None] * _OCC_HIGH
    occ_idx = _weighted_rows(rng, occ_weights)

    work_idx = rng.choice(len(_WORKCLASS), size=n,
                          p=_WORKCLASS_PROBS / _WORKCLASS_PROBS.sum())

    white_collar = occ_idx >= 12
    hours = 40.0 + 5.0 * white_collar + 3.5 * male - 9.0 * child \
        + 9.5 * rng.standard_normal(n)
    hours = np.clip(np.round(hours), 1, 99).astype(np.int64)

    p_gain = np.clip(0.03 + 0.07 * edu_frac + 0.03 * (age_bin >= 4), 0.0, 0.5)
    has_gain = rng.random(n) < p_gain
    gain_val = np.clip(np.round(np.exp(rng.normal(1.9, 0.9, size=n))), 1, 99)
    capital_gain = np.where(has_gain, gain_val, 0).astype(np.int64)

    has_loss = rng.random(n) < 0.047
    loss_val = np.clip(np.round(rng.normal(19.0, 3.0, size=n)), 1, 39)
    capital_loss = np.where(has_loss, loss_val, 0).astype(np.int64)

    fnlwgt = np.clip(np.round(np.exp(rng.normal(2.7, 0.55, size=n))), 0, 39)
    fnlwgt = fnlwgt.astype(np.int64)

    race_idx = rng.choice(len(_RACE), size=n, p=_RACE_PROBS / _RACE_PROBS.sum())

    country_probs = np.array([0.896, 0.020] + [0.084 / 38] * 38)
    country_idx = rng.choice(len(_COUNTRIES), size=n,
                             p=country_probs / country_probs.sum())

    married_civ = marital_idx == 6
    f_edu = 0.15 + 0.85 * edu_frac
    f_age = np.exp(-(((age_years - 45.0) / 18.0) ** 2))
    f_hours = (1.0 - np.exp(-hours / 30.0)) / (1.0 - np.exp(-50.0 / 30.0))
    f_marital = 0.45 + 0.55 * married_civ
    f_country = 1.0 - 0.55 * (country_idx >= 1)
    f_work = 1.0 - 0.85 * np.isin(work_idx, [2, 7])
    f_gain = 1.0 + 0.45 * np.sqrt(capital_gain / 99.0)
    f_loss = 1.0 - 0.35 * (capital_loss >= 1)
    f_sex = 1.0 + 0.06 * male
    score = (f_edu * f_age * f_hours * f_marital * f_country * f_work
             * f_gain * f_loss * f_sex)
    labels = (rng.random(n) < _sigmoid(10.0 * (score - 0.52))).astype(np.int64)

    rows = []
    for i in range(n):
        rows.append((
            int(age_bin[i]),
            _WORKCLASS[work_idx[i]],
            int(fnlwgt[i]),
            _EDUCATION[edu_idx[i]],
            _MARITAL[marital_idx[i]],
            _OCCUPATION[occ_idx[i]],
            _RELATIONSHIP[rel_idx[i]],
            _RACE[race_idx[i]],
            str(sex[i]),
            int(capital_gain[i]),
            int(capital_loss[i]),
            int(hours[i]),
            _COUNTRIES[country_idx[i]],
        ))
    return Dataset(schema, rows, labels, validate=False)


def census_train(seed: int = 0) -> Dataset:
    return synth_census(TRAIN_ROWS, seed=seed)


def census_test(seed: int = 0) -> Dataset:
    return synth_census(TEST_ROWS, seed=seed + 7919)


def write_csv(dataset: Dataset, path: str) -> None:
    """Write a dataset as a header-first CSV matching its schema."""
    import csv

    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(dataset.schema.column_names() + [dataset.schema.label_name])
        for row, label in zip(dataset.rows, dataset.labels):
            writer.writerow([_cell(v) for v in row] + [int(label)])


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
