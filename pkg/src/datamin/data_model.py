"""Typed tabular datasets: schema, CSV ingestion, cleaning, and the four-way split."""

from __future__ import annotations

import csv
import json
import random
import statistics
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigError, EmptyDatasetError, ParseError, SchemaError

NUMERIC = "numeric"
CATEGORICAL = "categorical"

ROLE_FEATURE = "feature"
ROLE_LABEL = "label"
ROLE_IGNORED = "ignored"

DEFAULT_MISSING_TOKENS = ("", "?", "NA", "N/A")

# A record is one cell per feature column: float, str, or None for missing.
Record = tuple


@dataclass(frozen=True)
class NumericDomain:
    """Closed interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (self.lo <= self.hi):
            raise SchemaError(f"numeric domain has lo > hi: [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class CategoricalDomain:
    """Finite set of category values, kept in a fixed order."""

    values: tuple[str, ...]

    def __post_init__(self):
        if not self.values:
            raise SchemaError("categorical domain must be non-empty")
        if len(set(self.values)) != len(self.values):
            raise SchemaError("categorical domain values must be unique")

    @cached_property
    def _codes(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.values)}

    def contains(self, value: str) -> bool:
        return value in self._codes

    def code(self, value: str) -> int:
        return self._codes[value]

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class FeatureSchema:
    name: str
    kind: str  # numeric | categorical
    domain: NumericDomain | CategoricalDomain | None = None
    role: str = ROLE_FEATURE

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"unknown feature kind {self.kind!r} for {self.name!r}")
        if self.role not in (ROLE_FEATURE, ROLE_LABEL, ROLE_IGNORED):
            raise SchemaError(f"unknown role {self.role!r} for {self.name!r}")
        if self.domain is not None:
            expected = NumericDomain if self.kind == NUMERIC else CategoricalDomain
            if not isinstance(self.domain, expected):
                raise SchemaError(f"domain type does not match kind for {self.name!r}")


@dataclass(frozen=True)
class CleanReport:
    records_before: int
    records_removed: int
    dropped_features: tuple[dict, ...]  # {"name": ..., "missing_fraction": ...}

    def to_json(self) -> dict:
        return {
            "records_before": self.records_before,
            "records_removed": self.records_removed,
            "dropped_features": list(self.dropped_features),
        }


@dataclass(frozen=True)
class Dataset:
    """Immutable tabular dataset. Records hold feature cells only; labels are separate."""

    schema: tuple[FeatureSchema, ...]
    records: tuple[Record, ...]
    labels: tuple | None = None
    clean_report: CleanReport | None = field(default=None, compare=False)

    def __post_init__(self):
        label_entries = [s for s in self.schema if s.role == ROLE_LABEL]
        if len(label_entries) != 1:
            raise SchemaError(
                f"dataset schema must declare exactly one label feature, got {len(label_entries)}"
            )
        n_features = len(self.feature_schemas)
        for i, rec in enumerate(self.records):
            if len(rec) != n_features:
                raise SchemaError(
                    f"record {i} has {len(rec)} cells, schema declares {n_features} features"
                )
        if self.labels is not None and len(self.labels) != len(self.records):
            raise SchemaError("labels must have one entry per record")

    @cached_property
    def feature_schemas(self) -> tuple[FeatureSchema, ...]:
        return tuple(s for s in self.schema if s.role == ROLE_FEATURE)

    @cached_property
    def label_schema(self) -> FeatureSchema:
        return next(s for s in self.schema if s.role == ROLE_LABEL)

    @cached_property
    def feature_index(self) -> dict[str, int]:
        return {s.name: i for i, s in enumerate(self.feature_schemas)}

    @property
    def n_records(self) -> int:
        return len(self.records)

    @property
    def n_features(self) -> int:
        return len(self.feature_schemas)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Encoded record matrix: numeric as-is, categoricals as domain codes, missing as NaN."""
        return encode_records(self.feature_schemas, self.records)

    def with_records(self, records: Sequence[Record], labels=None) -> "Dataset":
        return Dataset(schema=self.schema, records=tuple(records), labels=labels)


def encode_records(feature_schemas: Sequence[FeatureSchema], records: Sequence[Record]) -> np.ndarray:
    out = np.empty((len(records), len(feature_schemas)), dtype=np.float64)
    for j, fs in enumerate(feature_schemas):
        if fs.kind == NUMERIC:
            col = [r[j] if r[j] is not None else np.nan for r in records]
        else:
            dom = fs.domain
            col = [dom.code(r[j]) if r[j] is not None else np.nan for r in records]
        out[:, j] = col
    return out


def decode_row(feature_schemas: Sequence[FeatureSchema], row: np.ndarray) -> Record:
    cells = []
    for j, fs in enumerate(feature_schemas):
        if fs.kind == NUMERIC:
            cells.append(float(row[j]))
        else:
            cells.append(fs.domain.values[int(row[j])])
    return tuple(cells)


@dataclass(frozen=True)
class SplitSpec:
    """Four-way split: original-model training, generalizer training, optimization, validation."""

    fractions: tuple[float, float, float, float] = (0.4, 0.2, 0.2, 0.2)
    seed: int = 0

    def __post_init__(self):
        if len(self.fractions) != 4:
            raise ConfigError("split spec needs exactly four fractions")
        if any(f < 0 for f in self.fractions):
            raise ConfigError("split fractions must be non-negative")
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise ConfigError(f"split fractions must sum to 1, got {sum(self.fractions)}")


def _parse_domain(cfg: dict, kind: str, name: str):
    if kind == NUMERIC:
        if "lo" not in cfg or "hi" not in cfg:
            raise SchemaError(f"numeric domain for {name!r} needs 'lo' and 'hi'")
        return NumericDomain(float(cfg["lo"]), float(cfg["hi"]))
    if "values" not in cfg:
        raise SchemaError(f"categorical domain for {name!r} needs 'values'")
    return CategoricalDomain(tuple(str(v) for v in cfg["values"]))


def schema_from_config(config: dict) -> tuple[list[FeatureSchema], tuple[str, ...]]:
    """Parse a schema config document into schema entries plus missing-value tokens."""
    entries = []
    for item in config.get("features", []):
        name = item["name"]
        kind = item.get("kind", NUMERIC)
        role = item.get("role", ROLE_FEATURE)
        domain = _parse_domain(item["domain"], kind, name) if "domain" in item else None
        entries.append(FeatureSchema(name=name, kind=kind, domain=domain, role=role))
    if not entries:
        raise SchemaError("schema config declares no features")
    missing = tuple(config.get("missing_tokens", DEFAULT_MISSING_TOKENS))
    return entries, missing


def schema_to_config(schema: Sequence[FeatureSchema]) -> dict:
    features = []
    for s in schema:
        item: dict = {"name": s.name, "kind": s.kind, "role": s.role}
        if isinstance(s.domain, NumericDomain):
            item["domain"] = {"lo": s.domain.lo, "hi": s.domain.hi}
        elif isinstance(s.domain, CategoricalDomain):
            item["domain"] = {"values": list(s.domain.values)}
        features.append(item)
    return {"features": features}


def load_schema_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def load_dataset(path, schema_config: dict) -> Dataset:
    """Load a CSV (header row required, RFC-4180) against a schema config."""
    entries, missing_tokens = schema_from_config(schema_config)
    missing = set(missing_tokens)

    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, header row required")
        rows = list(reader)

    col_of = {name: i for i, name in enumerate(header)}
    for entry in entries:
        if entry.name not in col_of:
            raise SchemaError(f"schema column {entry.name!r} not present in CSV header")

    feature_entries = [e for e in entries if e.role == ROLE_FEATURE]
    label_entries = [e for e in entries if e.role == ROLE_LABEL]
    if len(label_entries) != 1:
        raise SchemaError(f"schema config must declare exactly one label, got {len(label_entries)}")
    label_entry = label_entries[0]

    def parse_cell(raw: str, entry: FeatureSchema, row_no: int):
        if raw in missing:
            return None
        if entry.kind == NUMERIC:
            try:
                value = float(raw)
            except ValueError:
                raise ParseError(
                    f"row {row_no}, column {entry.name!r}: cannot parse {raw!r} as numeric"
                )
            if entry.domain is not None and not entry.domain.contains(value):
                raise ParseError(
                    f"row {row_no}, column {entry.name!r}: value {value} outside declared domain"
                )
            return value
        value = raw.strip()
        if entry.domain is not None and not entry.domain.contains(value):
            raise ParseError(
                f"row {row_no}, column {entry.name!r}: value {value!r} outside declared domain"
            )
        return value

    records = []
    labels = []
    for row_no, row in enumerate(rows, start=2):  # 1-based with header on line 1
        if len(row) != len(header):
            raise ParseError(f"row {row_no}: expected {len(header)} cells, got {len(row)}")
        records.append(
            tuple(parse_cell(row[col_of[e.name]], e, row_no) for e in feature_entries)
        )
        labels.append(parse_cell(row[col_of[label_entry.name]], label_entry, row_no))

    # Infer missing domains from the observed values.
    resolved = []
    for j, entry in enumerate(feature_entries):
        if entry.domain is not None:
            resolved.append(entry)
            continue
        observed = [r[j] for r in records if r[j] is not None]
        if not observed:
            raise SchemaError(f"cannot infer domain for {entry.name!r}: no observed values")
        if entry.kind == NUMERIC:
            domain = NumericDomain(min(observed), max(observed))
        else:
            domain = CategoricalDomain(tuple(sorted(set(observed))))
        resolved.append(FeatureSchema(entry.name, entry.kind, domain, entry.role))

    if label_entry.domain is None:
        observed = sorted({l for l in labels if l is not None})
        if not observed:
            raise SchemaError("label column has no observed values")
        if label_entry.kind == NUMERIC:
            # Labels are treated as class identifiers even when numeric-looking.
            label_entry = FeatureSchema(
                label_entry.name, CATEGORICAL,
                CategoricalDomain(tuple(_format_cell(v) for v in sorted(set(observed)))),
                ROLE_LABEL,
            )
            labels = [None if l is None else _format_cell(l) for l in labels]
        else:
            label_entry = FeatureSchema(
                label_entry.name, CATEGORICAL, CategoricalDomain(tuple(observed)), ROLE_LABEL
            )
    elif label_entry.kind == NUMERIC:
        raise SchemaError("label feature must be categorical (class labels)")

    schema = tuple(resolved) + (label_entry,)
    return Dataset(schema=schema, records=tuple(records), labels=tuple(labels))


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def save_dataset(ds: Dataset, path) -> None:
    """Write features plus the label column; numeric cells round-trip through load_dataset."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        names = [s.name for s in ds.feature_schemas] + [ds.label_schema.name]
        writer.writerow(names)
        labels = ds.labels if ds.labels is not None else [None] * ds.n_records
        for rec, label in zip(ds.records, labels):
            writer.writerow([_format_cell(c) for c in rec] + [_format_cell(label)])


@dataclass(frozen=True)
class CleanPolicy:
    max_missing_fraction: float = 0.5


def clean_dataset(ds: Dataset, policy: CleanPolicy = CleanPolicy()) -> Dataset:
    """Drop records without a label and features with too much missing data."""
    if ds.labels is None:
        raise ConfigError("clean_dataset requires a dataset with labels")

    keep_rows = [i for i, label in enumerate(ds.labels) if label is not None]
    if not keep_rows:
        raise EmptyDatasetError("all records dropped: no record has a label value")
    records = [ds.records[i] for i in keep_rows]
    labels = [ds.labels[i] for i in keep_rows]
    removed = ds.n_records - len(records)

    dropped = []
    keep_features = []
    n = len(records)
    for j, fs in enumerate(ds.feature_schemas):
        missing = sum(1 for r in records if r[j] is None)
        fraction = missing / n
        if fraction > policy.max_missing_fraction:
            dropped.append({"name": fs.name, "missing_fraction": fraction})
        else:
            keep_features.append(j)

    if dropped:
        kept_schemas = tuple(ds.feature_schemas[j] for j in keep_features)
        records = [tuple(r[j] for j in keep_features) for r in records]
        schema = kept_schemas + (ds.label_schema,)
    else:
        schema = ds.schema

    report = CleanReport(
        records_before=ds.n_records,
        records_removed=removed,
        dropped_features=tuple(dropped),
    )
    return Dataset(
        schema=schema, records=tuple(records), labels=tuple(labels), clean_report=report
    )


def split_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment with ascending-index tie-break."""
    quotas = [n * f for f in fractions]
    sizes = [int(q) for q in quotas]
    leftover = n - sum(sizes)
    remainders = sorted(
        range(len(fractions)), key=lambda i: (-(quotas[i] - sizes[i]), i)
    )
    for i in remainders[:leftover]:
        sizes[i] += 1
    return sizes


def split_dataset(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset, Dataset]:
    """Deterministic disjoint four-way partition; sizes follow largest-remainder rounding."""
    n = ds.n_records
    sizes = split_sizes(n, spec.fractions)
    for i, (size, fraction) in enumerate(zip(sizes, spec.fractions)):
        if n > 0 and fraction > 0 and size == 0:
            raise ConfigError(f"split {i} has fraction {fraction} but would receive 0 records")

    indices = list(range(n))
    random.Random(spec.seed).shuffle(indices)

    parts = []
    cursor = 0
    for size in sizes:
        chunk = sorted(indices[cursor : cursor + size])
        cursor += size
        records = tuple(ds.records[i] for i in chunk)
        labels = tuple(ds.labels[i] for i in chunk) if ds.labels is not None else None
        parts.append(Dataset(schema=ds.schema, records=records, labels=labels))
    return tuple(parts)


@dataclass(frozen=True)
class ImputeStats:
    """Per-feature fill values: numeric median / categorical mode of a reference split."""

    fills: tuple

    @classmethod
    def from_dataset(cls, reference: Dataset) -> "ImputeStats":
        fills = []
        for j, fs in enumerate(reference.feature_schemas):
            observed = [r[j] for r in reference.records if r[j] is not None]
            if fs.kind == NUMERIC:
                if observed:
                    fills.append(float(statistics.median(observed)))
                else:
                    fills.append((fs.domain.lo + fs.domain.hi) / 2.0)
            else:
                if observed:
                    counts: dict[str, int] = {}
                    for v in observed:
                        counts[v] = counts.get(v, 0) + 1
                    best = max(counts.values())
                    # ties broken by domain order
                    fills.append(
                        next(v for v in fs.domain.values if counts.get(v) == best)
                    )
                else:
                    fills.append(fs.domain.values[0])
        return cls(fills=tuple(fills))


def impute_missing(ds: Dataset, stats: ImputeStats) -> Dataset:
    if len(stats.fills) != ds.n_features:
        raise SchemaError("impute stats do not match dataset feature count")
    records = tuple(
        tuple(stats.fills[j] if c is None else c for j, c in enumerate(rec))
        for rec in ds.records
    )
    return Dataset(schema=ds.schema, records=records, labels=ds.labels)
