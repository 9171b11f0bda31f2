"""Latent tabular generator: a Gaussian copula with vector-arithmetic latents.

The copula decodes a standard-normal latent vector z into a schema-valid row
by correlating it (x = L z), pushing each coordinate through the normal CDF,
and inverting the per-column empirical marginal. Its latent space is exactly
Gaussian and linear in semantics, which is what the boundary-probing stages
rely on. One latent axis per feature column.

External generators (e.g. GAN decoders served by another process) plug in
through the stdio bridge and declare their own latent dimension; see
``limi.bridge``.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.stats import rankdata
from sklearn.base import BaseEstimator

from .errors import DegenerateColumn, SchemaError
from .normals import norm_cdf, norm_ppf
from .schema import CATEGORICAL, NUMERIC, Dataset, Row, Schema

COPULA_FORMAT = "limi-copula/1"


def sample_latents(n: int, latent_dim: int, seed) -> np.ndarray:
    """Draw n i.i.d. standard-normal latent vectors, deterministic per seed."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, latent_dim))


class _NumericMarginal:
    """Empirical quantile table; inverse CDF by interpolation between order statistics."""

    def __init__(self, quantiles: np.ndarray, lo: float, hi: float) -> None:
        self.quantiles = np.asarray(quantiles, dtype=np.float64)
        self.lo = float(lo)
        self.hi = float(hi)
        n = len(self.quantiles)
        self.positions = (np.arange(n) + 0.5) / n

    @classmethod
    def fit(cls, values: np.ndarray, lo: float, hi: float) -> "_NumericMarginal":
        return cls(np.sort(np.asarray(values, dtype=np.float64)), lo, hi)

    def inverse(self, u: np.ndarray) -> np.ndarray:
        out = np.interp(u, self.positions, self.quantiles)
        return np.clip(out, self.lo, self.hi)

    def normal_scores(self, values: np.ndarray) -> np.ndarray:
        ranks = rankdata(values, method="average")
        return norm_ppf((ranks - 0.5) / len(values))


class _CategoricalMarginal:
    """Cumulative frequency intervals per category, in domain order."""

    def __init__(self, categories: tuple, cum: np.ndarray) -> None:
        self.categories = tuple(categories)
        self.cum = np.asarray(cum, dtype=np.float64)

    @classmethod
    def fit(cls, values: list, categories: tuple) -> "_CategoricalMarginal":
        index = {c: i for i, c in enumerate(categories)}
        counts = np.zeros(len(categories), dtype=np.float64)
        for v in values:
            counts[index[v]] += 1
        cum = np.cumsum(counts / counts.sum())
        cum[-1] = 1.0
        return cls(categories, cum)

    def inverse_index(self, u: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.cum, u, side="right")
        return np.minimum(idx, len(self.categories) - 1)

    def normal_scores(self, values: list) -> np.ndarray:
        lower = np.concatenate([[0.0], self.cum[:-1]])
        mid = (lower + self.cum) / 2.0
        mid = np.clip(mid, 1e-12, 1.0 - 1e-12)
        score_of = {c: s for c, s in zip(self.categories, norm_ppf(mid))}
        return np.array([score_of[v] for v in values], dtype=np.float64)


class GaussianCopula(BaseEstimator):
    """Tabular synthesizer: empirical marginals glued by a Gaussian copula.

    fit() estimates per-column marginals and a normal-score correlation
    matrix, regularised until its Cholesky factor exists. decode() is a pure
    deterministic function of the fitted model and a latent vector.
    """

    def __init__(self, seed: int = 0) -> None:
        self.seed = seed

    def fit(self, dataset: Dataset) -> "GaussianCopula":
        schema = dataset.schema
        n = len(dataset)
        if n == 0:
            raise SchemaError("cannot fit a generator on an empty dataset")

        marginals: list = []
        scores = np.empty((n, schema.n_columns), dtype=np.float64)
        for j, col in enumerate(schema.columns):
            values = [row[j] for row in dataset.rows]
            if len(set(values)) < 2:
                raise DegenerateColumn(col.name)
            if col.kind == NUMERIC:
                arr = np.asarray(values, dtype=np.float64)
                marginal = _NumericMarginal.fit(arr, *col.domain)
                scores[:, j] = marginal.normal_scores(arr)
            else:
                marginal = _CategoricalMarginal.fit(values, col.domain)
                scores[:, j] = marginal.normal_scores(values)
            marginals.append(marginal)

        corr = np.atleast_2d(np.corrcoef(scores, rowvar=False))
        self.schema_ = schema
        self.marginals_ = marginals
        self.correlation_ = corr
        self.cholesky_ = _regularized_cholesky(corr)
        self.latent_dim_ = schema.n_columns
        return self

    @property
    def latent_dim(self) -> int:
        return self.latent_dim_

    @property
    def schema(self) -> Schema:
        return self.schema_

    def decode_batch(self, latents: np.ndarray) -> list[Row]:
        Z = np.atleast_2d(np.asarray(latents, dtype=np.float64))
        if Z.shape[1] != self.latent_dim_:
            raise ValueError(f"latent dimension must be {self.latent_dim_}")
        correlated = Z @ self.cholesky_.T
        U = norm_cdf(correlated)

        columns: list = []
        for j, (col, marginal) in enumerate(zip(self.schema_.columns, self.marginals_)):
            if col.kind == NUMERIC:
                columns.append(marginal.inverse(U[:, j]))
            else:
                idx = marginal.inverse_index(U[:, j])
                columns.append([marginal.categories[i] for i in idx])
        rows = []
        for i in range(Z.shape[0]):
            rows.append(
                tuple(
                    float(columns[j][i]) if self.schema_.columns[j].kind == NUMERIC
                    else columns[j][i]
                    for j in range(self.schema_.n_columns)
                )
            )
        return rows

    def decode(self, z: np.ndarray) -> Row:
        return self.decode_batch(np.asarray(z, dtype=np.float64).reshape(1, -1))[0]

    def sample_rows(self, n: int, seed) -> list[Row]:
        return self.decode_batch(sample_latents(n, self.latent_dim_, seed))

    def to_dict(self) -> dict:
        cols = []
        for col, marginal in zip(self.schema_.columns, self.marginals_):
            if col.kind == NUMERIC:
                cols.append({
                    "name": col.name,
                    "kind": NUMERIC,
                    "quantiles": marginal.quantiles.tolist(),
                })
            else:
                cols.append({
                    "name": col.name,
                    "kind": CATEGORICAL,
                    "cum": marginal.cum.tolist(),
                })
        return {
            "format": COPULA_FORMAT,
            "schema": self.schema_.to_dict(),
            "latent_dim": self.latent_dim_,
            "cholesky": self.cholesky_.tolist(),
            "columns": cols,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "GaussianCopula":
        if doc.get("format") != COPULA_FORMAT:
            raise SchemaError(f"unsupported generator format {doc.get('format')!r}")
        schema = Schema.from_dict(doc["schema"])
        gen = cls()
        gen.schema_ = schema
        gen.latent_dim_ = int(doc["latent_dim"])
        gen.cholesky_ = np.asarray(doc["cholesky"], dtype=np.float64)
        gen.correlation_ = gen.cholesky_ @ gen.cholesky_.T
        marginals: list = []
        for col, saved in zip(schema.columns, doc["columns"]):
            if saved["name"] != col.name:
                raise SchemaError("generator file does not match its embedded schema")
            if col.kind == NUMERIC:
                marginals.append(
                    _NumericMarginal(np.asarray(saved["quantiles"]), *col.domain)
                )
            else:
                marginals.append(
                    _CategoricalMarginal(col.domain, np.asarray(saved["cum"]))
                )
        gen.marginals_ = marginals
        return gen

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path: str) -> "GaussianCopula":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _regularized_cholesky(corr: np.ndarray) -> np.ndarray:
    """Cholesky factor of corr + delta*I, escalating delta x10 until it exists."""
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        pass
    delta = 1e-6
    while delta <= 1.0:
        try:
            return np.linalg.cholesky(corr + delta * np.eye(corr.shape[0]))
        except np.linalg.LinAlgError:
            delta *= 10.0
    raise SchemaError("correlation matrix cannot be regularized to positive definite")


def fit_copula(dataset: Dataset, seed: int = 0) -> GaussianCopula:
    """Fit the built-in copula generator (deterministic; seed kept for interface parity)."""
    return GaussianCopula(seed=seed).fit(dataset)
