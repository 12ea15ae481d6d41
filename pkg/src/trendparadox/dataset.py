"""Typed, column-oriented event tables and their CSV form."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

ROLES = ("actor", "timestamp", "covariate", "outcome")
KINDS = ("binary", "continuous", "categorical", "count")

_DTYPES = {"binary": np.int64, "count": np.int64, "continuous": np.float64}


class DatasetError(ValueError):
    """Base class for schema, ingestion and validation failures."""


class SchemaError(DatasetError):
    pass


class MissingColumnError(DatasetError):
    def __init__(self, column: str):
        super().__init__(f"missing column {column!r}")
        self.column = column


class ParseError(DatasetError):
    """A cell could not be parsed. ``row`` is the 1-based data row (header excluded)."""

    def __init__(self, row: int, column: str, value: str, reason: str):
        super().__init__(f"row {row}, column {column!r}: {reason} ({value!r})")
        self.row = row
        self.column = column
        self.value = value


@dataclass(frozen=True)
class VariableSpec:
    name: str
    role: str
    kind: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise SchemaError(f"variable {self.name!r}: unknown role {self.role!r}")
        if self.kind not in KINDS:
            raise SchemaError(f"variable {self.name!r}: unknown kind {self.kind!r}")
        if self.role == "timestamp" and self.kind != "continuous":
            raise SchemaError(f"timestamp {self.name!r} must be continuous")
        if self.role == "actor" and self.kind != "categorical":
            raise SchemaError(f"actor {self.name!r} must be categorical")

    @property
    def numeric(self) -> bool:
        return self.kind != "categorical"


def actor(name: str) -> VariableSpec:
    return VariableSpec(name, "actor", "categorical")


def timestamp(name: str) -> VariableSpec:
    return VariableSpec(name, "timestamp", "continuous")


def covariate(name: str, kind: str = "continuous") -> VariableSpec:
    return VariableSpec(name, "covariate", kind)


def outcome(name: str, kind: str = "binary") -> VariableSpec:
    return VariableSpec(name, "outcome", kind)


def validate_schema(schema: Sequence[VariableSpec]) -> None:
    names = [v.name for v in schema]
    dupes = sorted({n for n in names if names.count(n) > 1})
    if dupes:
        raise SchemaError(f"duplicate variable names: {dupes}")
    for role in ("actor", "timestamp", "outcome"):
        if sum(v.role == role for v in schema) > 1:
            raise SchemaError(f"schema has more than one {role} variable")


def _coerce(spec: VariableSpec, values) -> np.ndarray:
    if spec.kind == "categorical":
        arr = np.asarray(values)
        if arr.dtype.kind != "U":
            arr = np.array([str(v) for v in np.ravel(arr)], dtype=str)
        if arr.size == 0:
            arr = np.zeros(0, dtype="<U1")
    else:
        arr = np.asarray(values)
        if arr.size == 0:
            arr = np.zeros(0, dtype=_DTYPES[spec.kind])
        elif spec.kind == "continuous":
            arr = arr.astype(np.float64, copy=False)
        else:
            if arr.dtype.kind == "f" and (
                not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr))
            ):
                raise DatasetError(f"column {spec.name!r}: {spec.kind} values must be integers")
            arr = arr.astype(np.int64, copy=False)
    # arrays owned by another Dataset are already frozen and can be shared
    if arr.flags.writeable:
        arr = arr.copy()
    return arr


@dataclass(frozen=True)
class EventRecord:
    """Row view of a :class:`Dataset`."""

    index: int
    actor_id: str | None
    timestamp: float | None
    covariates: dict
    outcome: object


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable column store. Construction validates every column."""

    schema: tuple[VariableSpec, ...]
    columns: Mapping[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        schema = tuple(self.schema)
        validate_schema(schema)
        cols = {}
        n = None
        for spec in schema:
            if spec.name not in self.columns:
                raise MissingColumnError(spec.name)
            arr = _coerce(spec, self.columns[spec.name])
            if arr.ndim != 1:
                raise DatasetError(f"column {spec.name!r} must be one-dimensional")
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise DatasetError(
                    f"column {spec.name!r} has {arr.shape[0]} rows, expected {n}"
                )
            if spec.kind == "continuous" and not np.all(np.isfinite(arr)):
                raise DatasetError(f"column {spec.name!r} has non-finite values")
            if spec.kind == "binary" and not np.all((arr == 0) | (arr == 1)):
                raise DatasetError(f"binary column {spec.name!r} has values outside {{0, 1}}")
            arr.setflags(write=False)
            cols[spec.name] = arr
        object.__setattr__(self, "schema", schema)
        object.__setattr__(self, "columns", cols)

    # -- lookup ---------------------------------------------------------
    @property
    def n_rows(self) -> int:
        if not self.schema:
            return 0
        return int(self.columns[self.schema[0].name].shape[0])

    def __len__(self) -> int:
        return self.n_rows

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.schema]

    def spec(self, name: str) -> VariableSpec:
        for v in self.schema:
            if v.name == name:
                return v
        raise KeyError(f"unknown variable {name!r}")

    def __contains__(self, name: str) -> bool:
        return name in self.columns

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.columns[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def _role(self, role: str) -> VariableSpec | None:
        for v in self.schema:
            if v.role == role:
                return v
        return None

    @property
    def actor_spec(self) -> VariableSpec | None:
        return self._role("actor")

    @property
    def time_spec(self) -> VariableSpec | None:
        return self._role("timestamp")

    @property
    def outcome_spec(self) -> VariableSpec | None:
        return self._role("outcome")

    @property
    def covariate_names(self) -> list[str]:
        return [v.name for v in self.schema if v.role == "covariate"]

    def require_roles(self, *roles: str) -> None:
        missing = [r for r in roles if self._role(r) is None]
        if missing:
            raise SchemaError(f"dataset has no {' or '.join(missing)} variable")

    def row(self, i: int) -> EventRecord:
        a, t, o = self.actor_spec, self.time_spec, self.outcome_spec
        return EventRecord(
            index=i,
            actor_id=str(self.columns[a.name][i]) if a else None,
            timestamp=float(self.columns[t.name][i]) if t else None,
            covariates={n: self.columns[n][i].item() for n in self.covariate_names},
            outcome=self.columns[o.name][i].item() if o else None,
        )

    # -- derivation -----------------------------------------------------
    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.schema, {k: v[rows] for k, v in self.columns.items()})

    def with_column(self, spec: VariableSpec, values) -> "Dataset":
        """Append ``spec`` or overwrite an existing column of the same name."""
        schema = [v for v in self.schema if v.name != spec.name] + [spec]
        if spec.name in self.columns:
            schema = [spec if v.name == spec.name else v for v in self.schema]
        cols = dict(self.columns)
        cols[spec.name] = values
        return Dataset(tuple(schema), cols)

    def replace_columns(self, values: Mapping[str, np.ndarray]) -> "Dataset":
        cols = dict(self.columns)
        for name, arr in values.items():
            self.spec(name)
            cols[name] = arr
        return Dataset(self.schema, cols)

    def drop(self, names: Iterable[str]) -> "Dataset":
        names = set(names)
        schema = tuple(v for v in self.schema if v.name not in names)
        return Dataset(schema, {v.name: self.columns[v.name] for v in schema})

    def equals(self, other: "Dataset") -> bool:
        if self.schema != other.schema:
            return False
        return all(np.array_equal(self.columns[n], other.columns[n]) for n in self.names)


def from_columns(schema: Sequence[VariableSpec], **columns) -> Dataset:
    return Dataset(tuple(schema), columns)


def actor_order(d: Dataset) -> np.ndarray:
    """Stable permutation ordering rows by (actor_id, timestamp)."""
    d.require_roles("actor", "timestamp")
    ids, ts = d[d.actor_spec.name], d[d.time_spec.name]
    if _is_sorted(ids, ts):
        return np.arange(ids.shape[0])
    return np.lexsort((ts, ids))


def _is_sorted(ids: np.ndarray, ts: np.ndarray) -> bool:
    # a stable sort of already-ordered rows is the identity, so skip it
    if ids.shape[0] < 2:
        return True
    same = ids[1:] == ids[:-1]
    return bool(np.all(same | (ids[1:] > ids[:-1])) and np.all(~same | (ts[1:] >= ts[:-1])))


def sort_by_actor_time(d: Dataset) -> Dataset:
    order = actor_order(d)
    if np.array_equal(order, np.arange(d.n_rows)):
        return d
    return d.take(order)


def actor_blocks(d: Dataset) -> np.ndarray:
    """Boolean mask of rows starting a new actor block; ``d`` must be actor-sorted."""
    ids = d[d.actor_spec.name]
    new = np.ones(ids.shape[0], dtype=bool)
    if ids.shape[0]:
        new[1:] = ids[1:] != ids[:-1]
    return new


# -- CSV ------------------------------------------------------------------

_MISSING = {"", "na", "nan", "null", "none"}


def _parse_cell(spec: VariableSpec, text: str, row: int):
    if spec.kind == "categorical":
        if text == "":
            raise ParseError(row, spec.name, text, "missing value")
        return text
    stripped = text.strip()
    if stripped.lower() in _MISSING:
        raise ParseError(row, spec.name, text, "missing value")
    try:
        value = float(stripped)
    except ValueError:
        raise ParseError(row, spec.name, text, f"not a {spec.kind} number") from None
    if not math.isfinite(value):
        raise ParseError(row, spec.name, text, "non-finite value")
    if spec.kind == "binary":
        if value not in (0.0, 1.0):
            raise ParseError(row, spec.name, text, "binary value outside {0, 1}")
        return int(value)
    if spec.kind == "count":
        if not value.is_integer():
            raise ParseError(row, spec.name, text, "count value is not an integer")
        return int(value)
    return value


def load_csv(path, schema: Sequence[VariableSpec]) -> Dataset:
    """Read the columns named in ``schema`` from a headed CSV file.

    Rows keep file order and undeclared columns are ignored.
    """
    schema = tuple(schema)
    validate_schema(schema)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header row required") from None
        positions = {}
        for spec in schema:
            if spec.name not in header:
                raise MissingColumnError(spec.name)
            positions[spec.name] = header.index(spec.name)
        values = {spec.name: [] for spec in schema}
        for row_no, rec in enumerate(reader, start=1):
            if not rec:
                continue
            if len(rec) != len(header):
                raise ParseError(row_no, "*", ",".join(rec),
                                 f"expected {len(header)} fields, got {len(rec)}")
            for spec in schema:
                values[spec.name].append(_parse_cell(spec, rec[positions[spec.name]], row_no))
    return Dataset(schema, values)


def read_header(path) -> list[str]:
    with open(path, newline="", encoding="utf-8") as fh:
        try:
            return next(csv.reader(fh))
        except StopIteration:
            raise DatasetError(f"{path}: empty file, header row required") from None


def format_value(spec: VariableSpec, value) -> str:
    if spec.kind == "categorical":
        return str(value)
    if spec.kind in ("binary", "count"):
        return str(int(value))
    value = float(value)
    if value.is_integer() and abs(value) < 2.0**53:
        return str(int(value))
    return repr(value)


def _format_column(spec: VariableSpec, col: np.ndarray) -> list[str]:
    if spec.kind == "categorical":
        return col.astype(str).tolist()
    if spec.kind in ("binary", "count"):
        return col.astype(np.int64).astype(str).tolist()
    whole = (col == np.floor(col)) & (np.abs(col) < 2.0**53)
    out = np.array([repr(float(v)) for v in col], dtype=object) if not whole.all() \
        else np.empty(col.shape[0], dtype=object)
    out[whole] = col[whole].astype(np.int64).astype(str)
    return out.tolist()


def write_csv(d: Dataset, target) -> None:
    """Write ``d`` so that :func:`load_csv` with ``d.schema`` reads it back exactly.

    ``target`` is a path or an open text stream.
    """
    if hasattr(target, "write"):
        _write_rows(d, target)
        return
    with open(target, "w", newline="", encoding="utf-8") as fh:
        _write_rows(d, fh)


def _write_rows(d: Dataset, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(d.names)
    w.writerows(zip(*(_format_column(spec, d[spec.name]) for spec in d.schema)))


def infer_kind(path, column: str) -> str:
    """Guess a column kind from its text: binary, count, continuous or categorical."""
    header = read_header(path)
    if column not in header:
        raise MissingColumnError(column)
    pos = header.index(column)
    seen_float = False
    values = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        for rec in reader:
            if not rec:
                continue
            text = rec[pos].strip()
            try:
                v = float(text)
            except ValueError:
                return "categorical"
            if not math.isfinite(v):
                return "categorical"
            if not v.is_integer():
                seen_float = True
            if len(values) <= 2:
                values.add(v)
    if seen_float:
        return "continuous"
    if values and values <= {0.0, 1.0}:
        return "binary"
    return "count"
