"""Univariate binary decision tree that mimics the prediction oracle.

Leaves are the clusters the generalization is built from, so the fitter grows
to homogeneous leaves by default and the tree supports collapsing one level
across the whole structure at once.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence, Union

import numpy as np

from .data_model import NUMERIC, FeatureSchema, Record, encode_records
from .errors import ConfigError, EmptyDatasetError, SchemaError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LeafNode:
    cluster_id: int
    class_counts: tuple[int, ...]  # aligned with the tree's class_labels
    majority_index: int
    purity_impossible: bool = False


@dataclass(frozen=True)
class InternalNode:
    feature: int
    threshold: float | None  # numeric test: value <= threshold goes left
    category: int | None  # categorical test: code == category goes left
    left: "TreeNode"
    right: "TreeNode"


TreeNode = Union[LeafNode, InternalNode]


@dataclass(frozen=True)
class GrowthParams:
    max_depth: int = 30
    purity_required: bool = True  # warn if the depth cap stops growth before homogeneity


@dataclass(frozen=True)
class GeneralizerTree:
    root: TreeNode
    depth: int
    schema: tuple[FeatureSchema, ...]
    class_labels: tuple[str, ...]
    fitted_level: int = 0

    def leaves(self) -> list[LeafNode]:
        out: list[LeafNode] = []
        _collect_leaves(self.root, out)
        return out

    def n_nodes(self) -> int:
        return _count_nodes(self.root)

    def majority_label(self, leaf: LeafNode) -> str:
        return self.class_labels[leaf.majority_index]

    def thresholds_of(self, feature: int) -> list[float]:
        """Sorted distinct numeric thresholds used anywhere in the tree for a feature."""
        vals: set[float] = set()
        _collect_thresholds(self.root, feature, vals)
        return sorted(vals)

    def categories_of(self, feature: int) -> list[int]:
        """Sorted distinct category codes split off anywhere in the tree for a feature."""
        codes: set[int] = set()
        _collect_categories(self.root, feature, codes)
        return sorted(codes)

    def split_features(self) -> set[int]:
        feats: set[int] = set()
        _collect_features(self.root, feats)
        return feats


def _collect_leaves(node: TreeNode, out: list[LeafNode]) -> None:
    if isinstance(node, LeafNode):
        out.append(node)
    else:
        _collect_leaves(node.left, out)
        _collect_leaves(node.right, out)


def _count_nodes(node: TreeNode) -> int:
    if isinstance(node, LeafNode):
        return 1
    return 1 + _count_nodes(node.left) + _count_nodes(node.right)


def _collect_thresholds(node: TreeNode, feature: int, out: set[float]) -> None:
    if isinstance(node, InternalNode):
        if node.feature == feature and node.threshold is not None:
            out.add(node.threshold)
        _collect_thresholds(node.left, feature, out)
        _collect_thresholds(node.right, feature, out)


def _collect_categories(node: TreeNode, feature: int, out: set[int]) -> None:
    if isinstance(node, InternalNode):
        if node.feature == feature and node.category is not None:
            out.add(node.category)
        _collect_categories(node.left, feature, out)
        _collect_categories(node.right, feature, out)


def _collect_features(node: TreeNode, out: set[int]) -> None:
    if isinstance(node, InternalNode):
        out.add(node.feature)
        _collect_features(node.left, out)
        _collect_features(node.right, out)


def _gini(counts: np.ndarray, total: int) -> float:
    p = counts / total
    return 1.0 - float(np.sum(p * p))


class _Builder:
    def __init__(self, X: np.ndarray, y: np.ndarray, schema, n_classes: int, params: GrowthParams):
        self.X = X
        self.y = y
        self.schema = schema
        self.n_classes = n_classes
        self.params = params
        self.capped_impure = False

    def build(self, idx: np.ndarray, depth: int) -> tuple[TreeNode, int]:
        counts = np.bincount(self.y[idx], minlength=self.n_classes)
        pure = int(np.count_nonzero(counts)) <= 1
        if pure or depth >= self.params.max_depth:
            if not pure and depth >= self.params.max_depth:
                self.capped_impure = True
            return self._leaf(counts, purity_impossible=False), depth

        split = self._best_split(idx, counts)
        if split is None:
            # indistinguishable records with differing labels
            return self._leaf(counts, purity_impossible=True), depth
        feature, threshold, category, left_mask = split
        left, dl = self.build(idx[left_mask], depth + 1)
        right, dr = self.build(idx[~left_mask], depth + 1)
        return (
            InternalNode(feature=feature, threshold=threshold, category=category, left=left, right=right),
            max(dl, dr),
        )

    def _leaf(self, counts: np.ndarray, purity_impossible: bool) -> LeafNode:
        return LeafNode(
            cluster_id=-1,
            class_counts=tuple(int(c) for c in counts),
            majority_index=int(np.argmax(counts)),
            purity_impossible=purity_impossible,
        )

    def _best_split(self, idx: np.ndarray, parent_counts: np.ndarray):
        """Best Gini split over all features; ties go to the lowest feature index,
        then the lowest threshold / category. Zero-gain splits are accepted so the
        tree can keep working toward homogeneous leaves."""
        n = len(idx)
        parent_gini = _gini(parent_counts, n)
        y = self.y[idx]
        one_hot = np.zeros((n, self.n_classes), dtype=np.float64)
        one_hot[np.arange(n), y] = 1.0

        best = None
        best_gain = -np.inf
        for j, fs in enumerate(self.schema):
            col = self.X[idx, j]
            if fs.kind == NUMERIC:
                cand = self._numeric_candidate(col, one_hot, n, parent_gini)
                if cand is not None and cand[1] > best_gain:
                    threshold, gain, mask = cand
                    best = (j, threshold, None, mask)
                    best_gain = gain
            else:
                cand = self._categorical_candidate(col, y, n, parent_gini)
                if cand is not None and cand[1] > best_gain:
                    category, gain, mask = cand
                    best = (j, None, category, mask)
                    best_gain = gain
        return best

    def _numeric_candidate(self, col, one_hot, n, parent_gini):
        order = np.argsort(col, kind="stable")
        sv = col[order]
        boundaries = np.flatnonzero(sv[:-1] != sv[1:])
        if len(boundaries) == 0:
            return None
        cum = np.cumsum(one_hot[order], axis=0)
        left_counts = cum[boundaries]
        total = cum[-1]
        right_counts = total - left_counts
        n_left = (boundaries + 1).astype(np.float64)
        n_right = n - n_left
        gini_left = 1.0 - np.sum((left_counts / n_left[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
        gains = parent_gini - (n_left / n) * gini_left - (n_right / n) * gini_right
        pos = int(np.argmax(gains))  # candidates ascend by threshold; first max wins
        i = boundaries[pos]
        threshold = (sv[i] + sv[i + 1]) / 2.0
        return threshold, float(gains[pos]), col <= threshold

    def _categorical_candidate(self, col, y, n, parent_gini):
        codes = col.astype(np.int64)
        cats = np.unique(codes)
        if len(cats) < 2:
            return None
        k = self.n_classes
        # per-category class counts in one pass
        compact = np.searchsorted(cats, codes)
        counts = np.bincount(compact * k + y, minlength=len(cats) * k).reshape(len(cats), k)
        counts = counts.astype(np.float64)
        n_left = counts.sum(axis=1)
        total = counts.sum(axis=0)
        right_counts = total - counts
        n_right = n - n_left
        gini_left = 1.0 - np.sum((counts / n_left[:, None]) ** 2, axis=1)
        gini_right = 1.0 - np.sum((right_counts / n_right[:, None]) ** 2, axis=1)
        gains = parent_gini - (n_left / n) * gini_left - (n_right / n) * gini_right
        pos = int(np.argmax(gains))  # categories ascend in domain order; first max wins
        category = int(cats[pos])
        return category, float(gains[pos]), codes == category


def fit_tree(
    schema: Sequence[FeatureSchema],
    records: Sequence[Record],
    labels: Sequence[str],
    params: GrowthParams = GrowthParams(),
    class_labels: Sequence[str] | None = None,
) -> GeneralizerTree:
    """Grow a Gini decision tree on oracle-labeled records, to homogeneity by default."""
    if len(records) == 0:
        raise EmptyDatasetError("cannot fit a tree on zero records")
    if len(records) != len(labels):
        raise ConfigError("records and labels must have the same length")

    if class_labels is None:
        class_labels = tuple(sorted(set(labels)))
    else:
        class_labels = tuple(class_labels)
    label_code = {l: i for i, l in enumerate(class_labels)}
    try:
        y = np.array([label_code[l] for l in labels], dtype=np.int64)
    except KeyError as exc:
        raise SchemaError(f"label {exc.args[0]!r} not in class labels") from exc

    X = encode_records(schema, records)
    if np.isnan(X).any():
        raise ConfigError("records contain missing values; impute before fitting")

    builder = _Builder(X, y, tuple(schema), len(class_labels), params)
    root, depth = builder.build(np.arange(len(records)), 0)
    if builder.capped_impure and params.purity_required:
        logger.warning(
            "tree growth stopped at the depth cap (%d) before all leaves were homogeneous",
            params.max_depth,
        )
    root = _assign_cluster_ids(root)
    return GeneralizerTree(
        root=root, depth=depth, schema=tuple(schema), class_labels=class_labels
    )


def _assign_cluster_ids(root: TreeNode) -> TreeNode:
    counter = [0]

    def walk(node: TreeNode) -> TreeNode:
        if isinstance(node, LeafNode):
            node = replace(node, cluster_id=counter[0])
            counter[0] += 1
            return node
        return replace(node, left=walk(node.left), right=walk(node.right))

    return walk(root)


def prune_level(tree: GeneralizerTree) -> GeneralizerTree:
    """Collapse every internal node whose children are both leaves, simultaneously.

    A single-leaf tree is returned unchanged (the same object), signalling the
    at-root condition.
    """
    if isinstance(tree.root, LeafNode):
        return tree

    def collapse(node: TreeNode) -> TreeNode:
        if isinstance(node, LeafNode):
            return node
        if isinstance(node.left, LeafNode) and isinstance(node.right, LeafNode):
            counts = tuple(
                a + b for a, b in zip(node.left.class_counts, node.right.class_counts)
            )
            return LeafNode(
                cluster_id=-1,
                class_counts=counts,
                majority_index=int(np.argmax(np.array(counts))),
                purity_impossible=False,
            )
        return replace(node, left=collapse(node.left), right=collapse(node.right))

    root = _assign_cluster_ids(collapse(tree.root))
    return GeneralizerTree(
        root=root,
        depth=_depth_of(root),
        schema=tree.schema,
        class_labels=tree.class_labels,
        fitted_level=tree.fitted_level + 1,
    )


def _depth_of(node: TreeNode) -> int:
    if isinstance(node, LeafNode):
        return 0
    return 1 + max(_depth_of(node.left), _depth_of(node.right))


def route_record(tree: GeneralizerTree, record: Record) -> int:
    """Follow the tests from the root; every record lands in exactly one leaf."""
    node = tree.root
    while isinstance(node, InternalNode):
        cell = record[node.feature]
        if node.threshold is not None:
            node = node.left if cell <= node.threshold else node.right
        else:
            value = tree.schema[node.feature].domain.values[node.category]
            node = node.left if cell == value else node.right
    return node.cluster_id


def route_matrix(tree: GeneralizerTree, X: np.ndarray) -> np.ndarray:
    """Vectorized routing of an encoded record matrix to leaf cluster ids."""
    out = np.empty(len(X), dtype=np.int64)

    def walk(node: TreeNode, idx: np.ndarray) -> None:
        if isinstance(node, LeafNode):
            out[idx] = node.cluster_id
            return
        col = X[idx, node.feature]
        mask = col <= node.threshold if node.threshold is not None else col == node.category
        walk(node.left, idx[mask])
        walk(node.right, idx[~mask])

    walk(tree.root, np.arange(len(X)))
    return out


def predict_matrix(tree: GeneralizerTree, X: np.ndarray) -> np.ndarray:
    """Majority-label indices for an encoded record matrix."""
    leaves = tree.leaves()
    lut = np.empty(len(leaves), dtype=np.int64)
    for leaf in leaves:
        lut[leaf.cluster_id] = leaf.majority_index
    return lut[route_matrix(tree, X)]


def tree_to_json(tree: GeneralizerTree) -> dict:
    def node_json(node: TreeNode) -> dict:
        if isinstance(node, LeafNode):
            return {
                "type": "leaf",
                "cluster_id": node.cluster_id,
                "class_counts": {
                    label: count
                    for label, count in zip(tree.class_labels, node.class_counts)
                },
                "majority_label": tree.class_labels[node.majority_index],
                "purity_impossible": node.purity_impossible,
            }
        fs = tree.schema[node.feature]
        test: dict = {"feature": fs.name}
        if node.threshold is not None:
            test["threshold"] = node.threshold
        else:
            test["category"] = fs.domain.values[node.category]
        return {
            "type": "split",
            **test,
            "left": node_json(node.left),
            "right": node_json(node.right),
        }

    return {
        "depth": tree.depth,
        "fitted_level": tree.fitted_level,
        "class_labels": list(tree.class_labels),
        "root": node_json(tree.root),
    }


def tree_from_json(doc: dict, schema: Sequence[FeatureSchema]) -> GeneralizerTree:
    schema = tuple(schema)
    name_to_index = {fs.name: j for j, fs in enumerate(schema)}
    class_labels = tuple(doc["class_labels"])
    label_index = {l: i for i, l in enumerate(class_labels)}

    def node_from(obj: dict) -> TreeNode:
        if obj["type"] == "leaf":
            counts = tuple(obj["class_counts"].get(l, 0) for l in class_labels)
            return LeafNode(
                cluster_id=obj["cluster_id"],
                class_counts=counts,
                majority_index=label_index[obj["majority_label"]],
                purity_impossible=obj.get("purity_impossible", False),
            )
        feature = name_to_index[obj["feature"]]
        fs = schema[feature]
        if "threshold" in obj:
            threshold, category = float(obj["threshold"]), None
        else:
            threshold, category = None, fs.domain.code(obj["category"])
        return InternalNode(
            feature=feature,
            threshold=threshold,
            category=category,
            left=node_from(obj["left"]),
            right=node_from(obj["right"]),
        )

    root = node_from(doc["root"])
    return GeneralizerTree(
        root=root,
        depth=doc.get("depth", _depth_of(root)),
        schema=schema,
        class_labels=class_labels,
        fitted_level=doc.get("fitted_level", 0),
    )
