"""Information-loss and risk arithmetic: NCP/GCP, relative accuracy, ILAG, disclosure risk."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data_model import NUMERIC, CategoricalDomain, NumericDomain, Record, encode_records
from .errors import ConfigError, ConsistencyError, EmptyDatasetError
from .generalization import (
    STATUS_SUPPRESSED,
    STATUS_UNTOUCHED,
    ClusterProfile,
    Generalization,
    NumericConstraint,
)
from .tree import GeneralizerTree, route_matrix


@dataclass(frozen=True)
class NcpReport:
    per_feature: tuple[float, ...]  # mean per-feature NCP over all records
    per_record: tuple[float, ...]
    gcp: float
    weights: tuple[float, ...]

    def to_json(self, feature_names: Sequence[str] | None = None) -> dict:
        per_feature = (
            dict(zip(feature_names, self.per_feature))
            if feature_names is not None
            else list(self.per_feature)
        )
        return {"gcp": self.gcp, "per_feature": per_feature, "weights": list(self.weights)}


@dataclass(frozen=True)
class AccuracyReport:
    matches: int
    total: int
    relative_accuracy: float

    @classmethod
    def from_counts(cls, matches: int, total: int) -> "AccuracyReport":
        return cls(matches=matches, total=total,
                   relative_accuracy=matches / total if total else 1.0)

    def to_json(self) -> dict:
        return {
            "matches": self.matches,
            "total": self.total,
            "relative_accuracy": self.relative_accuracy,
        }


def ncp_numeric(rng: tuple[float, float], domain: NumericDomain) -> float:
    """Width of a generalized range relative to the domain width."""
    a, b = rng
    if not (domain.lo <= a <= b <= domain.hi):
        raise ConsistencyError(f"range [{a}, {b}] not inside domain [{domain.lo}, {domain.hi}]")
    if domain.width == 0:
        return 0.0  # nothing to lose
    return (b - a) / domain.width


def ncp_categorical(group: Sequence[str], domain: CategoricalDomain) -> float:
    """Distinct values disclosed relative to the domain; a singleton discloses exactly."""
    if len(group) == 0:
        raise ConfigError("category group must be non-empty")
    if len(group) == 1:
        return 0.0
    return len(group) / len(domain)


def ilag(ncp_f: float, accuracy_gain_f: float) -> float:
    """Information loss per unit of accuracy gain; falls back to the loss itself
    when the gain is zero."""
    if accuracy_gain_f != 0:
        return ncp_f / accuracy_gain_f
    return ncp_f


def disclosure_risk(records: Sequence[Record], quasi_identifiers: Sequence[int]) -> float:
    """Mean over records of 1 / frequency of the record's quasi-identifier combination."""
    if len(records) == 0:
        raise EmptyDatasetError("disclosure risk needs at least one record")
    if len(quasi_identifiers) == 0:
        raise ConfigError("disclosure risk needs at least one quasi-identifier")
    combos = [tuple(r[j] for j in quasi_identifiers) for r in records]
    freq = Counter(combos)
    return sum(1.0 / freq[c] for c in combos) / len(records)


def relative_accuracy(oracle, original_records, generalized_records) -> AccuracyReport:
    """Fraction of the oracle's original predictions retained on generalized records."""
    if len(original_records) != len(generalized_records):
        raise ConfigError("original and generalized record lists must align")
    before = oracle.predict(original_records)
    after = oracle.predict(generalized_records)
    matches = sum(1 for a, b in zip(before, after) if a == b)
    return AccuracyReport.from_counts(matches, len(original_records))


def _feature_weights(n_features: int, weights) -> np.ndarray:
    if weights is None:
        return np.ones(n_features)
    w = np.asarray(weights, dtype=np.float64)
    if len(w) != n_features:
        raise ConfigError("one weight per feature required")
    if (w < 0).any() or w.sum() == 0:
        raise ConfigError("weights must be non-negative and not all zero")
    return w


def ncp_matrix(
    gen: Generalization,
    tree: GeneralizerTree,
    profiles: Sequence[ClusterProfile],
    X: np.ndarray,
) -> np.ndarray:
    """Per-record, per-feature NCP values for encoded records."""
    schema = tree.schema
    n = len(X)
    N = np.zeros((n, len(schema)))
    leaf_ids = route_matrix(tree, X) if gen.recoding == "local" else None

    for fg in gen.features:
        j = fg.feature
        fs = schema[j]
        if fg.status == STATUS_UNTOUCHED:
            continue
        if fg.status == STATUS_SUPPRESSED:
            if fs.kind == NUMERIC:
                N[:, j] = ncp_numeric((fs.domain.lo, fs.domain.hi), fs.domain)
            else:
                N[:, j] = ncp_categorical(fs.domain.values, fs.domain)
            continue
        # generalized
        if gen.recoding == "global":
            col = X[:, j]
            if fs.kind == NUMERIC:
                bad = (col < fs.domain.lo) | (col > fs.domain.hi)
                if bad.any():
                    row = int(np.flatnonzero(bad)[0])
                    raise ConsistencyError(
                        f"record {row}, feature {fs.name!r}: value {col[row]} outside every range"
                    )
                ends = np.array([r.end for r in fg.ranges])
                idx = np.searchsorted(ends, col, side="left")
                ratios = np.array([ncp_numeric((r.start, r.end), fs.domain) for r in fg.ranges])
                N[:, j] = ratios[idx]
            else:
                lut = np.empty(len(fs.domain.values))
                lut.fill(np.nan)
                for group in fg.groups:
                    value = ncp_categorical(group, fs.domain)
                    for v in group:
                        lut[fs.domain.code(v)] = value
                if np.isnan(lut).any():
                    missing = fs.domain.values[int(np.flatnonzero(np.isnan(lut))[0])]
                    raise ConsistencyError(
                        f"feature {fs.name!r}: category {missing!r} not covered by any group"
                    )
                N[:, j] = lut[col.astype(np.int64)]
        else:  # local recoding: score the routed cluster's constraint
            per_cluster = np.empty(len(profiles))
            for p in profiles:
                c = p.constraints.get(j)
                if c is None:
                    if fs.kind == NUMERIC:
                        value = ncp_numeric((fs.domain.lo, fs.domain.hi), fs.domain)
                    else:
                        value = ncp_categorical(fs.domain.values, fs.domain)
                elif isinstance(c, NumericConstraint):
                    value = ncp_numeric((max(c.low, fs.domain.lo), c.high), fs.domain)
                else:
                    value = ncp_categorical(c.allowed, fs.domain)
                per_cluster[p.cluster_id] = value
            N[:, j] = per_cluster[leaf_ids]
    return N


def ncp_dataset(
    gen: Generalization,
    tree: GeneralizerTree,
    profiles: Sequence[ClusterProfile],
    records: Sequence[Record],
    weights=None,
) -> NcpReport:
    """Weighted per-record NCP averaged into the dataset-level GCP."""
    w = _feature_weights(len(tree.schema), weights)
    X = encode_records(tree.schema, records)
    N = ncp_matrix(gen, tree, profiles, X)
    per_record = N @ w / w.sum()
    per_feature = N.mean(axis=0) if len(records) else np.zeros(len(tree.schema))
    gcp = float(per_record.mean()) if len(records) else 0.0
    return NcpReport(
        per_feature=tuple(float(v) for v in per_feature),
        per_record=tuple(float(v) for v in per_record),
        gcp=gcp,
        weights=tuple(float(v) for v in w),
    )
