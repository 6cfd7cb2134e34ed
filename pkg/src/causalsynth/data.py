"""Schema-aware tabular data model and CSV exchange I/O.

Every pipeline in the workbench moves data around as a :class:`Dataset`:
a validated numeric table whose columns are described by a
:class:`ColumnSchema` list in the canonical order *covariates, treatment,
outcome*.  The CSV exchange format is deliberately rigid so that external
generators can interoperate bit-predictably:

* UTF-8 text, one header line with the exact schema names, comma separated;
* column order = covariates (schema order), then treatment, then outcome;
* numeric values only, period decimal separator, no quoting;
* canonical number formatting on write: integral values are written without
  a decimal point (``0``, ``1``), everything else uses the shortest
  round-trip decimal representation.

Files written by :func:`write_table` survive a load/write round trip
byte-identically (modulo a trailing newline).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ValidationError
from .rng import generator

__all__ = [
    "ColumnSchema",
    "Dataset",
    "Standardizer",
    "validate_schema",
    "schema_to_json",
    "schema_from_json",
    "load_table",
    "write_table",
    "fit_standardizer",
    "subsample",
]

KINDS = ("binary", "continuous")
ROLES = ("covariate", "treatment", "outcome")


@dataclass(frozen=True)
class ColumnSchema:
    """One column: an identifier, a value kind, and a causal role."""

    name: str
    kind: str
    role: str

    def __post_init__(self) -> None:
        if not self.name or "," in self.name or "\n" in self.name:
            raise ValidationError(f"invalid column name {self.name!r}")
        if self.kind not in KINDS:
            raise ValidationError(f"column {self.name}: unknown kind {self.kind!r}")
        if self.role not in ROLES:
            raise ValidationError(f"column {self.name}: unknown role {self.role!r}")


def validate_schema(schema: Sequence[ColumnSchema]) -> tuple[ColumnSchema, ...]:
    """Check schema invariants and the canonical column order.

    Exactly one treatment column (binary), exactly one outcome column, at
    least one covariate, unique names, and the order covariates -> treatment
    -> outcome.
    """
    schema = tuple(schema)
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        raise ValidationError("column names must be unique")
    roles = [c.role for c in schema]
    if roles.count("treatment") != 1:
        raise ValidationError("schema must contain exactly one treatment column")
    if roles.count("outcome") != 1:
        raise ValidationError("schema must contain exactly one outcome column")
    d = roles.count("covariate")
    if d < 1:
        raise ValidationError("schema must contain at least one covariate column")
    expected = ["covariate"] * d + ["treatment", "outcome"]
    if roles != expected:
        raise ValidationError(
            "columns must be ordered covariates, then treatment, then outcome"
        )
    treatment = schema[d]
    if treatment.kind != "binary":
        raise ValidationError("treatment column must be binary")
    return schema


def schema_to_json(schema: Sequence[ColumnSchema]) -> str:
    return json.dumps(
        [{"name": c.name, "kind": c.kind, "role": c.role} for c in schema],
        indent=2,
    )


def schema_from_json(text: str) -> tuple[ColumnSchema, ...]:
    try:
        raw = json.loads(text)
        schema = tuple(ColumnSchema(c["name"], c["kind"], c["role"]) for c in raw)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"malformed schema document: {exc}") from exc
    return validate_schema(schema)


@dataclass(frozen=True)
class Dataset:
    """Immutable numeric table of (covariates, treatment, outcome) rows.

    ``rows`` is an ``n x (d + 2)`` float64 matrix in schema column order.
    Construction validates finiteness and binary domains; the array is
    frozen afterwards so datasets can be shared freely across workers.
    """

    schema: tuple[ColumnSchema, ...]
    rows: np.ndarray

    def __post_init__(self) -> None:
        schema = validate_schema(self.schema)
        object.__setattr__(self, "schema", schema)
        rows = np.ascontiguousarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise ValidationError("rows must be a 2-d matrix")
        if rows.shape[0] < 1:
            raise ValidationError("dataset must contain at least one row")
        if rows.shape[1] != len(schema):
            raise ValidationError(
                f"row width {rows.shape[1]} does not match schema width {len(schema)}"
            )
        if not np.all(np.isfinite(rows)):
            i, j = np.argwhere(~np.isfinite(rows))[0]
            raise ValidationError(
                f"non-finite value in row {i + 1}, column {schema[j].name!r}"
            )
        for j, col in enumerate(schema):
            if col.kind == "binary":
                bad = ~np.isin(rows[:, j], (0.0, 1.0))
                if bad.any():
                    i = int(np.argmax(bad))
                    raise ValidationError(
                        f"binary column {col.name!r} has value {rows[i, j]!r} "
                        f"in row {i + 1}"
                    )
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1] - 2

    @property
    def covariates(self) -> np.ndarray:
        return self.rows[:, : self.d]

    @property
    def treatment(self) -> np.ndarray:
        return self.rows[:, self.d]

    @property
    def outcome(self) -> np.ndarray:
        return self.rows[:, self.d + 1]

    @property
    def covariate_schema(self) -> tuple[ColumnSchema, ...]:
        return self.schema[: self.d]

    def with_rows(self, rows: np.ndarray) -> "Dataset":
        """New dataset with the same schema and different rows."""
        return Dataset(self.schema, rows)


def _parse_value(token: str, row: int, col: ColumnSchema) -> float:
    try:
        value = float(token)
    except ValueError as exc:
        raise ValidationError(
            f"row {row}, column {col.name!r}: cannot parse {token!r}"
        ) from exc
    if not np.isfinite(value):
        raise ValidationError(f"row {row}, column {col.name!r}: non-finite value")
    if col.kind == "binary" and value not in (0.0, 1.0):
        raise ValidationError(
            f"row {row}, column {col.name!r}: binary column has value {token!r}"
        )
    return value


def load_table(path, schema: Sequence[ColumnSchema]) -> Dataset:
    """Read an exchange CSV against a declared schema.

    The header must equal the schema names in declared order; any
    non-finite value or out-of-domain binary entry fails with an error
    naming the row and column.
    """
    schema = validate_schema(schema)
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").rstrip("\r")
        expected = ",".join(c.name for c in schema)
        if header != expected:
            raise ValidationError(
                f"header mismatch: expected {expected!r}, found {header!r}"
            )
        data: list[list[float]] = []
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = line.split(",")
            if len(tokens) != len(schema):
                raise ValidationError(
                    f"row {lineno}: expected {len(schema)} fields, found {len(tokens)}"
                )
            data.append(
                [_parse_value(t, lineno, c) for t, c in zip(tokens, schema)]
            )
    if not data:
        raise ValidationError(f"{path}: no data rows")
    return Dataset(schema, np.asarray(data, dtype=float))


def format_value(value: float) -> str:
    """Canonical exchange formatting: integral values without a decimal point."""
    value = float(value)
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def write_table(ds: Dataset, path) -> None:
    """Write a dataset in the canonical exchange CSV format."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(c.name for c in ds.schema) + "\n")
        for row in ds.rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


@dataclass(frozen=True)
class Standardizer:
    """Per-covariate location/scale used for distance computations.

    Continuous columns map to ``(x - mean) / scale`` with the sample
    standard deviation (denominator n - 1) as scale; degenerate columns
    fall back to scale 1.  Binary columns pass through unchanged so that
    0/1 semantics survive in Euclidean distances.
    """

    mean: np.ndarray
    scale: np.ndarray
    kinds: tuple[str, ...]

    @classmethod
    def identity(cls, kinds: Iterable[str]) -> "Standardizer":
        kinds = tuple(kinds)
        return cls(np.zeros(len(kinds)), np.ones(len(kinds)), kinds)

    def apply(self, W: np.ndarray) -> np.ndarray:
        W = np.asarray(W, dtype=float)
        if W.ndim == 1:
            W = W[None, :]
        if W.shape[1] != len(self.kinds):
            raise ValidationError(
                f"covariate width {W.shape[1]} does not match standardizer "
                f"width {len(self.kinds)}"
            )
        return (W - self.mean) / self.scale


def fit_standardizer(ds: Dataset) -> Standardizer:
    """Fit covariate means/scales on ``ds`` (binary columns untouched)."""
    W = ds.covariates
    kinds = tuple(c.kind for c in ds.covariate_schema)
    mean = np.zeros(ds.d)
    scale = np.ones(ds.d)
    for j, kind in enumerate(kinds):
        if kind != "continuous":
            continue
        mean[j] = W[:, j].mean()
        sd = W[:, j].std(ddof=1) if ds.n > 1 else 0.0
        scale[j] = sd if np.isfinite(sd) and sd > 0 else 1.0
    return Standardizer(mean, scale, kinds)


def subsample(ds: Dataset, m: int, seed: int) -> Dataset:
    """Draw ``m`` rows without replacement, deterministically in ``seed``.

    The draw takes the first ``m`` entries of a seeded permutation of the
    row indices, so ``m = n`` returns a permutation of the full dataset and
    smaller draws at the same seed are nested prefixes.
    """
    m = int(m)
    if m < 1 or m > ds.n:
        raise ValidationError(f"subsample size {m} outside [1, {ds.n}]")
    idx = generator(seed).permutation(ds.n)[:m]
    return ds.with_rows(ds.rows[idx])
