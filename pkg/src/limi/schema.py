"""Tabular data model: column specs, schemas, datasets, encoding, variants.

A schema describes typed columns (numeric intervals or ordered categorical
value lists), flags the protected attributes, and names the binary label.
Rows are plain tuples validated against the schema; the encoded view scales
every column into [0, 1] so downstream models see a uniform feature space.

Numeric columns are integer-stepped (binned) for variant enumeration and
uniform sampling; arbitrary real values inside the interval remain valid
row values (generators may emit interpolated numerics).
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadLabel,
    MissingColumn,
    OutOfDomainValue,
    SchemaError,
)

Value = int | float | str
Row = tuple[Value, ...]

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class ColumnSpec:
    """One typed column: a closed integer interval or an ordered category list.

    ``privileged_values`` is only consulted by group-fairness metrics; it must
    be a subset of the domain and is usually empty for non-protected columns.
    """

    name: str
    kind: str
    domain: tuple
    protected: bool = False
    privileged_values: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"column {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == NUMERIC:
            if len(self.domain) != 2:
                raise SchemaError(f"column {self.name!r}: numeric domain must be (lo, hi)")
            lo, hi = self.domain
            if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
                raise SchemaError(f"column {self.name!r}: empty interval {self.domain!r}")
        else:
            if len(self.domain) == 0:
                raise SchemaError(f"column {self.name!r}: empty category list")
            if len(set(self.domain)) != len(self.domain):
                raise SchemaError(f"column {self.name!r}: duplicate categories")
        for v in self.privileged_values:
            if not self.contains(v):
                raise SchemaError(
                    f"column {self.name!r}: privileged value {v!r} outside domain"
                )

    def contains(self, value: Value) -> bool:
        if self.kind == NUMERIC:
            if isinstance(value, str):
                return False
            lo, hi = self.domain
            return lo <= value <= hi
        return value in self.domain

    def enumerate_values(self) -> list[Value]:
        """All substitutable values: integer steps for numeric, the list itself."""
        if self.kind == NUMERIC:
            lo, hi = self.domain
            return list(range(int(np.ceil(lo)), int(np.floor(hi)) + 1))
        return list(self.domain)

    def encode_value(self, value: Value) -> float:
        if self.kind == NUMERIC:
            lo, hi = self.domain
            if hi == lo:
                return 0.0
            return (float(value) - lo) / (hi - lo)
        k = len(self.domain)
        if k == 1:
            return 0.0
        return self.domain.index(value) / (k - 1)


@dataclass(frozen=True)
class Schema:
    """Ordered feature columns plus the binary label contract."""

    columns: tuple[ColumnSpec, ...]
    label_name: str
    favorable_label: int = 1

    def __post_init__(self) -> None:
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate column names")
        if self.label_name in names:
            raise SchemaError("label must not be listed among feature columns")
        if not any(c.protected for c in self.columns):
            raise SchemaError("schema needs at least one protected column")
        if self.favorable_label not in (0, 1):
            raise SchemaError("favorable_label must be 0 or 1")

    @property
    def n_columns(self) -> int:
        return len(self.columns)

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise MissingColumn(name)

    def column(self, name: str) -> ColumnSpec:
        return self.columns[self.column_index(name)]

    def protected_indices(self) -> list[int]:
        return [i for i, c in enumerate(self.columns) if c.protected]

    def encoding_map(self) -> dict[str, int]:
        """Column name -> feature index under the default ordinal encoding."""
        return {c.name: i for i, c in enumerate(self.columns)}

    def validate_row(self, row: Row, row_index: int = -1) -> None:
        if len(row) != len(self.columns):
            raise SchemaError(
                f"row {row_index}: expected {len(self.columns)} values, got {len(row)}"
            )
        for col, value in zip(self.columns, row):
            if not col.contains(value):
                raise OutOfDomainValue(row_index, col.name, value)

    def with_protected(self, names: list[str]) -> "Schema":
        """Copy of this schema with exactly ``names`` flagged as protected.

        Used to focus a testing run on a single attribute (the default) or on
        a chosen combination, regardless of how the base schema is flagged.
        """
        if not names:
            raise SchemaError("at least one protected column is required")
        missing = [n for n in names if n not in self.column_names()]
        if missing:
            raise MissingColumn(missing[0])
        cols = tuple(
            ColumnSpec(c.name, c.kind, c.domain, c.name in names, c.privileged_values)
            for c in self.columns
        )
        return Schema(cols, self.label_name, self.favorable_label)

    def to_dict(self) -> dict:
        return {
            "columns": [
                {
                    "name": c.name,
                    "kind": c.kind,
                    "domain": list(c.domain),
                    "protected": c.protected,
                    "privileged_values": list(c.privileged_values),
                }
                for c in self.columns
            ],
            "label": self.label_name,
            "favorable_label": self.favorable_label,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Schema":
        try:
            cols = tuple(
                ColumnSpec(
                    name=c["name"],
                    kind=c["kind"],
                    domain=tuple(c["domain"]),
                    protected=bool(c.get("protected", False)),
                    privileged_values=tuple(c.get("privileged_values", ())),
                )
                for c in doc["columns"]
            )
            return cls(cols, doc["label"], int(doc.get("favorable_label", 1)))
        except KeyError as exc:
            raise SchemaError(f"schema document missing key {exc}") from exc

    @classmethod
    def from_json(cls, path: str) -> "Schema":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class Dataset:
    """Validated rows plus their binary labels."""

    schema: Schema
    rows: list[Row]
    labels: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if len(self.rows) != len(labels):
            raise SchemaError("row and label counts differ")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise SchemaError("labels must be 0 or 1")
        if self.validate:
            for i, row in enumerate(self.rows):
                self.schema.validate_row(row, i)

    def __len__(self) -> int:
        return len(self.rows)

    def subset(self, indices) -> "Dataset":
        idx = np.asarray(indices)
        return Dataset(
            self.schema,
            [self.rows[i] for i in idx],
            self.labels[idx],
            validate=False,
        )

    def concat(self, other: "Dataset") -> "Dataset":
        if other.schema.to_dict() != self.schema.to_dict():
            raise SchemaError("cannot concatenate datasets with different schemas")
        return Dataset(
            self.schema,
            self.rows + other.rows,
            np.concatenate([self.labels, other.labels]),
            validate=False,
        )


def _parse_cell(col: ColumnSpec, text: str, row_index: int) -> Value:
    if col.kind == CATEGORICAL:
        if text not in col.domain:
            raise OutOfDomainValue(row_index, col.name, text)
        return text
    try:
        value = float(text)
    except ValueError:
        raise OutOfDomainValue(row_index, col.name, text) from None
    lo, hi = col.domain
    if not lo <= value <= hi:
        raise OutOfDomainValue(row_index, col.name, value)
    if value.is_integer():
        return int(value)
    return value


def load_csv(path: str, schema: Schema) -> Dataset:
    """Read a header-first CSV into a validated ``Dataset``.

    The header must contain every schema column and the label column; extra
    columns are ignored (this lets exported pair files round-trip). Labels
    must parse as 0 or 1.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        positions = {name: i for i, name in enumerate(header)}
        for col in schema.columns:
            if col.name not in positions:
                raise MissingColumn(col.name)
        if schema.label_name not in positions:
            raise MissingColumn(schema.label_name)
        col_pos = [positions[c.name] for c in schema.columns]
        label_pos = positions[schema.label_name]

        rows: list[Row] = []
        labels: list[int] = []
        for row_index, record in enumerate(reader):
            if len(record) < len(header):
                raise SchemaError(f"row {row_index}: expected {len(header)} cells")
            values = tuple(
                _parse_cell(col, record[pos], row_index)
                for col, pos in zip(schema.columns, col_pos)
            )
            raw_label = record[label_pos].strip()
            if raw_label not in ("0", "1"):
                raise BadLabel(row_index, raw_label)
            rows.append(values)
            labels.append(int(raw_label))
    return Dataset(schema, rows, np.asarray(labels), validate=False)


def encode(schema: Schema, row: Row) -> np.ndarray:
    """Encode one row into the [0, 1] feature space (one entry per column)."""
    return np.array(
        [col.encode_value(v) for col, v in zip(schema.columns, row)], dtype=np.float64
    )


def encode_rows(schema: Schema, rows: list[Row]) -> np.ndarray:
    """Vectorised ``encode`` over many rows; returns an (n, n_columns) matrix."""
    n = len(rows)
    out = np.empty((n, schema.n_columns), dtype=np.float64)
    for j, col in enumerate(schema.columns):
        if col.kind == NUMERIC:
            lo, hi = col.domain
            vals = np.fromiter((row[j] for row in rows), dtype=np.float64, count=n)
            out[:, j] = 0.0 if hi == lo else (vals - lo) / (hi - lo)
        else:
            index = {v: i for i, v in enumerate(col.domain)}
            k = len(col.domain)
            idx = np.fromiter((index[row[j]] for row in rows), dtype=np.float64, count=n)
            out[:, j] = 0.0 if k == 1 else idx / (k - 1)
    return out


def encode_dataset(dataset: Dataset) -> tuple[np.ndarray, np.ndarray]:
    return encode_rows(dataset.schema, dataset.rows), dataset.labels.copy()


def protected_combos(schema: Schema) -> list[tuple[Value, ...]]:
    """Cartesian product of protected-column values, in schema order."""
    idx = schema.protected_indices()
    if not idx:
        raise SchemaError("schema has no protected columns")
    domains = [schema.columns[i].enumerate_values() for i in idx]
    return list(itertools.product(*domains))


def protected_variants(schema: Schema, row: Row) -> list[Row]:
    """Every row reachable by changing only protected attributes.

    Enumerates the cartesian product of the protected columns' stepped
    domains in schema order, substitutes each combination, and drops the
    one equal to the original row. Non-protected values are untouched.
    """
    idx = schema.protected_indices()
    original = tuple(row[i] for i in idx)
    variants = []
    for combo in protected_combos(schema):
        if combo == original:
            continue
        variant = list(row)
        for i, v in zip(idx, combo):
            variant[i] = v
        variants.append(tuple(variant))
    return variants


def sample_uniform(schema: Schema, n: int, seed: int) -> list[Row]:
    """Draw ``n`` rows independently and uniformly over each column's domain.

    Numeric columns draw integer steps; categorical columns draw categories.
    Deterministic for a given seed.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    cols = []
    for col in schema.columns:
        if col.kind == NUMERIC:
            lo, hi = col.domain
            cols.append(rng.integers(int(np.ceil(lo)), int(np.floor(hi)) + 1, size=n))
        else:
            cols.append(rng.integers(0, len(col.domain), size=n))
    rows: list[Row] = []
    for i in range(n):
        values = []
        for col, draws in zip(schema.columns, cols):
            if col.kind == NUMERIC:
                values.append(int(draws[i]))
            else:
                values.append(col.domain[draws[i]])
        rows.append(tuple(values))
    return rows
