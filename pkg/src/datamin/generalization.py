"""Generalizations derived from the tree: global ranges, per-cluster constraints,
representative points, and the record mapping that realizes them."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from .data_model import (
    NUMERIC,
    FeatureSchema,
    NumericDomain,
    Record,
    encode_records,
)
from .errors import ConsistencyError, DataminError
from .tree import GeneralizerTree, LeafNode, TreeNode, route_matrix, route_record

STATUS_UNTOUCHED = "untouched"
STATUS_GENERALIZED = "generalized"
STATUS_SUPPRESSED = "suppressed"


@dataclass(frozen=True)
class NumericRange:
    start: float
    end: float

    @property
    def width(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class FeatureGeneralization:
    feature: int
    status: str
    ranges: tuple[NumericRange, ...] = ()  # numeric, sorted, covering the domain
    groups: tuple[tuple[str, ...], ...] = ()  # categorical, a partition of the domain


@dataclass(frozen=True)
class Generalization:
    features: tuple[FeatureGeneralization, ...]
    recoding: str = "global"  # global | local

    def feature_status(self, feature: int) -> str:
        return self.features[feature].status


@dataclass(frozen=True)
class NumericConstraint:
    """Path-implied interval; values satisfy low < v <= high (low == domain lo is closed)."""

    low: float
    high: float

    def contains(self, value: float, domain: NumericDomain) -> bool:
        if self.low <= domain.lo:
            return domain.lo <= value <= self.high
        return self.low < value <= self.high

    @property
    def width(self) -> float:
        return self.high - self.low


@dataclass(frozen=True)
class CategoryConstraint:
    allowed: tuple[str, ...]

    def contains(self, value: str) -> bool:
        return value in self.allowed


Constraint = NumericConstraint | CategoryConstraint


@dataclass(frozen=True)
class ClusterProfile:
    cluster_id: int
    constraints: Mapping[int, Constraint]  # absent feature index = unconstrained
    majority_label: str
    class_counts: Mapping[str, int]
    representative: Record | None = None
    representative_index: int | None = None


def derive_global(tree: GeneralizerTree) -> Generalization:
    """Combine every split value per feature into global ranges / category groups.

    Features the tree never tests are suppressed: no value of theirs is needed
    to reproduce any leaf decision.
    """
    features = []
    for j, fs in enumerate(tree.schema):
        if fs.kind == NUMERIC:
            thresholds = [t for t in tree.thresholds_of(j) if fs.domain.lo < t < fs.domain.hi]
            if thresholds:
                edges = [fs.domain.lo] + thresholds + [fs.domain.hi]
                ranges = tuple(NumericRange(a, b) for a, b in zip(edges, edges[1:]))
                features.append(FeatureGeneralization(j, STATUS_GENERALIZED, ranges=ranges))
            else:
                features.append(FeatureGeneralization(j, STATUS_SUPPRESSED))
        else:
            codes = tree.categories_of(j)
            if codes:
                tested = {fs.domain.values[c] for c in codes}
                groups = [(v,) for v in fs.domain.values if v in tested]
                remainder = tuple(v for v in fs.domain.values if v not in tested)
                if remainder:
                    groups.append(remainder)
                groups.sort(key=lambda g: fs.domain.code(g[0]))
                features.append(
                    FeatureGeneralization(j, STATUS_GENERALIZED, groups=tuple(groups))
                )
            else:
                features.append(FeatureGeneralization(j, STATUS_SUPPRESSED))
    return Generalization(features=tuple(features), recoding="global")


def cluster_profiles(tree: GeneralizerTree) -> list[ClusterProfile]:
    """One profile per leaf; constraints are the intersections of the path tests."""
    profiles: list[ClusterProfile] = []

    def walk(node: TreeNode, bounds: dict[int, tuple[float, float]], allowed: dict[int, tuple[str, ...]]):
        if isinstance(node, LeafNode):
            constraints: dict[int, Constraint] = {}
            for j, (low, high) in bounds.items():
                fs = tree.schema[j]
                if low > fs.domain.lo or high < fs.domain.hi:
                    constraints[j] = NumericConstraint(low, high)
            for j, values in allowed.items():
                fs = tree.schema[j]
                if len(values) < len(fs.domain.values):
                    constraints[j] = CategoryConstraint(values)
            profiles.append(
                ClusterProfile(
                    cluster_id=node.cluster_id,
                    constraints=constraints,
                    majority_label=tree.majority_label(node),
                    class_counts={
                        label: count
                        for label, count in zip(tree.class_labels, node.class_counts)
                    },
                )
            )
            return
        j = node.feature
        fs = tree.schema[j]
        if node.threshold is not None:
            low, high = bounds.get(j, (fs.domain.lo, fs.domain.hi))
            t = node.threshold
            walk(node.left, {**bounds, j: (low, min(high, t))}, allowed)
            walk(node.right, {**bounds, j: (max(low, t), high)}, allowed)
        else:
            values = allowed.get(j, fs.domain.values)
            value = fs.domain.values[node.category]
            left_values = (value,) if value in values else ()
            right_values = tuple(v for v in values if v != value)
            walk(node.left, bounds, {**allowed, j: left_values})
            walk(node.right, bounds, {**allowed, j: right_values})

    walk(tree.root, {}, {})
    profiles.sort(key=lambda p: p.cluster_id)
    return profiles


def select_representatives(
    tree: GeneralizerTree,
    profiles: Sequence[ClusterProfile],
    records: Sequence[Record],
    labels: Sequence[str],
) -> list[ClusterProfile]:
    """Pick, per cluster, the training record nearest its median that the oracle
    labels with the cluster majority (nearest overall as a fallback)."""
    X = encode_records(tree.schema, records)
    leaf_ids = route_matrix(tree, X)
    label_arr = np.array(labels, dtype=object)

    widths = np.array(
        [
            fs.domain.width if fs.kind == NUMERIC else 1.0
            for fs in tree.schema
        ]
    )
    numeric_mask = np.array([fs.kind == NUMERIC for fs in tree.schema])

    out = []
    for profile in profiles:
        idx = np.flatnonzero(leaf_ids == profile.cluster_id)
        if len(idx) == 0:
            raise DataminError(
                f"cluster {profile.cluster_id} has no training records (invariant violation)"
            )
        sub = X[idx]
        median = np.empty(sub.shape[1])
        for j in range(sub.shape[1]):
            col = sub[:, j]
            if numeric_mask[j]:
                median[j] = np.median(col)
            else:
                counts = np.bincount(col.astype(np.int64))
                median[j] = int(np.argmax(counts))  # mode; ties to the lowest code

        dist = np.zeros(len(idx))
        for j in range(sub.shape[1]):
            if numeric_mask[j]:
                w = widths[j]
                dist += np.abs(sub[:, j] - median[j]) / w if w > 0 else 0.0
            else:
                dist += (sub[:, j] != median[j]).astype(np.float64)
        dist /= sub.shape[1]

        candidates = np.flatnonzero(label_arr[idx] == profile.majority_label)
        pool = candidates if len(candidates) > 0 else np.arange(len(idx))
        chosen = idx[pool[int(np.argmin(dist[pool]))]]  # first min = lowest record index
        out.append(
            replace(
                profile,
                representative=records[chosen],
                representative_index=int(chosen),
            )
        )
    return out


def generalize_record(
    record: Record, tree: GeneralizerTree, profiles: Sequence[ClusterProfile]
) -> Record:
    by_id = {p.cluster_id: p for p in profiles}
    return by_id[route_record(tree, record)].representative


def remove_feature(gen: Generalization, feature: int) -> Generalization:
    """Set a feature's status to untouched. Returns the same object when it
    already is, signalling the no-op."""
    current = gen.features[feature]
    if current.status == STATUS_UNTOUCHED:
        return gen
    features = list(gen.features)
    features[feature] = FeatureGeneralization(feature, STATUS_UNTOUCHED)
    return replace(gen, features=tuple(features))


def untouched_features(gen: Generalization) -> list[int]:
    return [fg.feature for fg in gen.features if fg.status == STATUS_UNTOUCHED]


def apply_generalization(
    gen: Generalization,
    tree: GeneralizerTree,
    profiles: Sequence[ClusterProfile],
    records: Sequence[Record],
) -> list[Record]:
    """Map each record to its cluster representative, restoring original values
    for untouched features."""
    by_id = {p.cluster_id: p.representative for p in profiles}
    keep = untouched_features(gen)
    out = []
    for record in records:
        rep = by_id[route_record(tree, record)]
        if keep:
            cells = list(rep)
            for j in keep:
                cells[j] = record[j]
            out.append(tuple(cells))
        else:
            out.append(rep)
    return out


def representatives_matrix(
    schema: Sequence[FeatureSchema], profiles: Sequence[ClusterProfile]
) -> np.ndarray:
    """Encoded representatives, row index = cluster id."""
    reps = [None] * len(profiles)
    for p in profiles:
        reps[p.cluster_id] = p.representative
    return encode_records(schema, reps)


def apply_generalization_matrix(
    gen: Generalization, leaf_ids: np.ndarray, X: np.ndarray, rep_matrix: np.ndarray
) -> np.ndarray:
    """Vectorized apply_generalization over pre-encoded records and routing."""
    out = rep_matrix[leaf_ids].copy()
    keep = untouched_features(gen)
    if keep:
        out[:, keep] = X[:, keep]
    return out


# --- serialization -----------------------------------------------------------

def generalization_to_json(gen: Generalization, schema: Sequence[FeatureSchema]) -> dict:
    features = []
    for fg in gen.features:
        fs = schema[fg.feature]
        item: dict = {"name": fs.name, "status": fg.status}
        if fg.ranges:
            item["ranges"] = [{"start": r.start, "end": r.end} for r in fg.ranges]
        if fg.groups:
            item["groups"] = [list(g) for g in fg.groups]
        features.append(item)
    return {"recoding": gen.recoding, "features": features}


def generalization_from_json(doc: dict, schema: Sequence[FeatureSchema]) -> Generalization:
    by_name = {fs.name: j for j, fs in enumerate(schema)}
    features: list[FeatureGeneralization | None] = [None] * len(schema)
    for item in doc["features"]:
        j = by_name[item["name"]]
        ranges = tuple(NumericRange(r["start"], r["end"]) for r in item.get("ranges", []))
        groups = tuple(tuple(g) for g in item.get("groups", []))
        features[j] = FeatureGeneralization(j, item["status"], ranges=ranges, groups=groups)
    if any(f is None for f in features):
        raise ConsistencyError("generalization document does not cover every schema feature")
    return Generalization(features=tuple(features), recoding=doc.get("recoding", "global"))


def profiles_to_json(profiles: Sequence[ClusterProfile], schema: Sequence[FeatureSchema]) -> dict:
    clusters = {}
    for p in profiles:
        constraints = {}
        for j, c in p.constraints.items():
            if isinstance(c, NumericConstraint):
                constraints[schema[j].name] = {"start": c.low, "end": c.high}
            else:
                constraints[schema[j].name] = {"categories": list(c.allowed)}
        rep = None
        if p.representative is not None:
            rep = {fs.name: cell for fs, cell in zip(schema, p.representative)}
        clusters[f"cluster_{p.cluster_id}"] = {
            "constraints": constraints,
            "representative": rep,
            "majority_label": p.majority_label,
            "class_counts": dict(p.class_counts),
        }
    return clusters


def profiles_from_json(doc: dict, schema: Sequence[FeatureSchema]) -> list[ClusterProfile]:
    by_name = {fs.name: j for j, fs in enumerate(schema)}
    profiles = []
    for key, item in doc.items():
        cluster_id = int(key.rsplit("_", 1)[1])
        constraints: dict[int, Constraint] = {}
        for name, c in item["constraints"].items():
            j = by_name[name]
            if "categories" in c:
                constraints[j] = CategoryConstraint(tuple(c["categories"]))
            else:
                constraints[j] = NumericConstraint(c["start"], c["end"])
        rep = None
        if item.get("representative") is not None:
            rep = tuple(item["representative"][fs.name] for fs in schema)
        profiles.append(
            ClusterProfile(
                cluster_id=cluster_id,
                constraints=constraints,
                majority_label=item["majority_label"],
                class_counts=dict(item["class_counts"]),
                representative=rep,
            )
        )
    profiles.sort(key=lambda p: p.cluster_id)
    return profiles
