"""CSV loading, feature encoding, min-max normalization, train/test splits.

Categorical and ordinal columns are label-encoded to integer codes and then
treated as numeric everywhere downstream; the per-feature RMSE metric and the
imputers all operate on one float matrix. Missing cells are carried as NaN,
written to disk as the literal token ``NA``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import DataError

NA_TOKEN = "NA"

KINDS = ("continuous", "binary", "categorical", "ordinal")


@dataclass
class FeatureSchema:
    """Column descriptor: name, kind, and the label order for coded kinds."""

    name: str
    kind: str = "continuous"
    labels: list | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown feature kind {self.kind!r} for column {self.name!r}")
        if self.labels is not None:
            if len(set(self.labels)) != len(self.labels):
                raise DataError(f"duplicate labels for column {self.name!r}")
            if self.kind == "binary" and len(self.labels) != 2:
                raise DataError(f"binary column {self.name!r} needs exactly 2 labels")


@dataclass
class Dataset:
    """A numeric matrix with its schema; NaN marks missing cells."""

    values: np.ndarray
    schema: list = field(default_factory=list)
    normalization: list | None = None  # per-feature (min, max) from the train split
    split_tag: str = "train"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DataError("dataset values must be a 2-D matrix")
        if self.schema and len(self.schema) != self.values.shape[1]:
            raise DataError(
                f"schema lists {len(self.schema)} columns, matrix has {self.values.shape[1]}"
            )
        if not self.schema:
            self.schema = [FeatureSchema(f"x{j}") for j in range(self.values.shape[1])]

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_features(self):
        return self.values.shape[1]

    @property
    def column_names(self):
        return [s.name for s in self.schema]

    def feature_kinds(self):
        """Model-facing head kinds: binary columns are bernoulli, rest gaussian."""
        return ["bernoulli" if s.kind == "binary" else "gaussian" for s in self.schema]


def parse_schema_spec(source):
    """Schema sidecar: one ``name kind [label ...]`` line per column.

    ``source`` may be a path or an already-built mapping of name -> kind or
    name -> FeatureSchema. Blank lines and ``#`` comments are skipped.
    """
    if source is None:
        return {}
    if isinstance(source, dict):
        out = {}
        for name, val in source.items():
            if isinstance(val, FeatureSchema):
                out[name] = val
            elif isinstance(val, str):
                out[name] = FeatureSchema(name, val)
            else:
                kind, labels = val
                out[name] = FeatureSchema(name, kind, list(labels))
        return out
    spec = {}
    for lineno, line in enumerate(Path(source).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise DataError(f"{source}:{lineno}: expected 'name kind [labels...]'")
        name, kind = parts[0], parts[1]
        labels = parts[2:] or None
        spec[name] = FeatureSchema(name, kind, labels)
    return spec


def _encode_column(name, kind, raw, declared_labels, path):
    """Turn one raw string column into floats, resolving labels if needed."""
    na_mask = [v == NA_TOKEN for v in raw]
    present = [v for v, na in zip(raw, na_mask) if not na]

    def as_floats():
        out = np.full(len(raw), np.nan)
        for i, (v, na) in enumerate(zip(raw, na_mask)):
            if na:
                continue
            try:
                out[i] = float(v)
            except ValueError:
                raise DataError(f"{path}: row {i + 1}, column {name!r}: cannot parse {v!r}") from None
        return out

    if kind == "continuous":
        return as_floats(), None
    if declared_labels is None:
        # numeric-looking coded columns pass through; otherwise discover labels
        try:
            values = as_floats()
        except DataError:
            declared_labels = sorted(set(present))
        else:
            if kind == "binary":
                observed = values[~np.isnan(values)]
                if not np.isin(observed, (0.0, 1.0)).all():
                    raise DataError(f"{path}: binary column {name!r} has values outside 0/1")
            return values, None
    if kind == "binary" and len(declared_labels) != 2:
        raise DataError(f"{path}: binary column {name!r} has {len(declared_labels)} labels")
    code = {label: float(i) for i, label in enumerate(declared_labels)}
    out = np.full(len(raw), np.nan)
    for i, (v, na) in enumerate(zip(raw, na_mask)):
        if na:
            continue
        if v not in code:
            raise DataError(f"{path}: row {i + 1}, column {name!r}: unknown label {v!r}")
        out[i] = code[v]
    return out, list(declared_labels)


def load_csv(path, schema_spec=None, split_tag="train"):
    """Read an RFC-4180-style CSV with header into a Dataset.

    Columns not covered by ``schema_spec`` are treated as continuous when all
    values parse as numbers, otherwise as categorical with label-sorted codes.
    """
    spec = parse_schema_spec(schema_spec)
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append([v.strip() for v in row])
    header = [h.strip() for h in header]
    schema = []
    columns = []
    for j, name in enumerate(header):
        declared = spec.get(name)
        kind = declared.kind if declared else "continuous"
        labels = declared.labels if declared else None
        raw = [row[j] for row in rows]
        try:
            values, resolved = _encode_column(name, kind, raw, labels, path)
        except DataError:
            if declared is not None:
                raise
            # undeclared non-numeric column: fall back to categorical discovery
            kind = "categorical"
            values, resolved = _encode_column(name, kind, raw, None, path)
        schema.append(FeatureSchema(name, kind, resolved))
        columns.append(values)
    values = np.column_stack(columns) if columns else np.zeros((len(rows), 0))
    return Dataset(values=values, schema=schema, split_tag=split_tag)


def minmax_fit_transform(train):
    """Scale each feature to [0, 1] using the training split's min/max.

    Constant features map to 0.0 everywhere. Returns (normalized dataset,
    params) where params is the per-feature (min, max) list.
    """
    values = train.values
    params = []
    for j, schema in enumerate(train.schema):
        col = values[:, j]
        observed = col[~np.isnan(col)]
        if observed.size == 0:
            raise DataError(f"feature {schema.name!r} has no observed training values")
        params.append((float(observed.min()), float(observed.max())))
    return minmax_apply(train, params), params


def minmax_apply(dataset, params):
    """Apply stored (min, max) scaling; out-of-range values are not clipped."""
    if len(params) != dataset.n_features:
        raise DataError("normalization params do not match the dataset width")
    out = dataset.values.copy()
    for j, (lo, hi) in enumerate(params):
        if hi == lo:
            col = out[:, j]
            col[~np.isnan(col)] = 0.0
        else:
            out[:, j] = (out[:, j] - lo) / (hi - lo)
    return replace(dataset, values=out, normalization=list(params))


def denormalize(values, params):
    """Invert min-max scaling; constant features return their stored min."""
    values = np.asarray(values, dtype=float)
    out = values.copy()
    for j, (lo, hi) in enumerate(params):
        out[:, j] = out[:, j] * (hi - lo) + lo
    return out


def split(dataset, test_fraction=0.18, seed=0):
    """Seeded disjoint row split; test gets round(n * fraction) rows."""
    if not 0.0 < test_fraction < 1.0:
        raise DataError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = dataset.n_rows
    if n < 2:
        raise DataError("cannot split a dataset with fewer than 2 rows")
    n_test = int(round(n * test_fraction))
    n_test = min(max(n_test, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    train = replace(dataset, values=dataset.values[train_idx], split_tag="train")
    test = replace(dataset, values=dataset.values[test_idx], split_tag="test")
    return train, test


def write_csv(path, values, column_names, missing=None):
    """Write a matrix as CSV; cells where ``missing`` is true become NA."""
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(column_names)
        for i in range(values.shape[0]):
            row = []
            for j in range(values.shape[1]):
                if missing is not None and missing[i, j]:
                    row.append(NA_TOKEN)
                else:
                    row.append(repr(float(values[i, j])))
            writer.writerow(row)
