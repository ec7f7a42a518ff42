"""Prediction oracles: the original ML model viewed as a black-box label source.

Adapters cover precomputed label columns, subprocess and HTTP models, and a
built-in bagged-tree reference classifier for desk-scale experiments.
"""

from __future__ import annotations

import json
import logging
import shlex
import subprocess
import threading
from abc import ABC, abstractmethod
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data_model import Dataset, FeatureSchema, Record, encode_records
from .errors import ConfigError, EmptyDatasetError, OracleError, OracleProtocolError
from .tree import GeneralizerTree, GrowthParams, fit_tree, predict_matrix

logger = logging.getLogger(__name__)


class PredictionOracle(ABC):
    """Maps raw records to class labels; deterministic on identical input."""

    kind: str = "abstract"
    class_labels: tuple[str, ...] = ()
    #: whether the oracle can label records it has never seen (False rules it
    #: out of minimization, which must evaluate generalized records)
    supports_novel_records: bool = True

    @abstractmethod
    def predict(self, records: Sequence[Record]) -> list[str]:
        ...

    def _check_labels(self, labels: list[str], expected: int) -> list[str]:
        if len(labels) != expected:
            raise OracleProtocolError(
                f"oracle returned {len(labels)} labels for {expected} records"
            )
        known = set(self.class_labels)
        for label in labels:
            if label not in known:
                raise OracleProtocolError(f"oracle returned unknown label {label!r}")
        return labels


class PrecomputedOracle(PredictionOracle):
    """Positional passthrough over a stored label column.

    Suitable as a label source for a fixed dataset; it cannot answer for
    generalized records, so minimization rejects it.
    """

    kind = "precomputed"
    supports_novel_records = False

    def __init__(self, labels: Sequence[str], class_labels: Sequence[str] | None = None):
        self._labels = tuple(labels)
        self.class_labels = (
            tuple(class_labels) if class_labels is not None else tuple(sorted(set(labels)))
        )

    def predict(self, records: Sequence[Record]) -> list[str]:
        if len(records) == 0:
            return []
        if len(records) != len(self._labels):
            raise OracleProtocolError(
                f"precomputed oracle holds {len(self._labels)} labels, got {len(records)} records"
            )
        return list(self._labels)


class SubprocessOracle(PredictionOracle):
    """Child process speaking newline-delimited JSON: one record object per stdin
    line, one label per stdout line, flushed per batch. Calls are serialized."""

    kind = "subprocess"

    def __init__(self, command, schema: Sequence[FeatureSchema], class_labels: Sequence[str]):
        self._command = shlex.split(command) if isinstance(command, str) else list(command)
        self._schema = tuple(schema)
        self.class_labels = tuple(class_labels)
        self._child: subprocess.Popen | None = None
        self._lock = threading.Lock()

    def _ensure_child(self) -> subprocess.Popen:
        if self._child is None or self._child.poll() is not None:
            try:
                self._child = subprocess.Popen(
                    self._command,
                    stdin=subprocess.PIPE,
                    stdout=subprocess.PIPE,
                    text=True,
                )
            except OSError as exc:
                raise OracleError(f"cannot start oracle subprocess: {exc}") from exc
        return self._child

    def predict(self, records: Sequence[Record]) -> list[str]:
        if len(records) == 0:
            return []
        with self._lock:
            child = self._ensure_child()
            try:
                for record in records:
                    obj = {fs.name: cell for fs, cell in zip(self._schema, record)}
                    child.stdin.write(json.dumps(obj) + "\n")
                child.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise OracleError(f"oracle subprocess unavailable: {exc}") from exc
            labels = []
            for _ in range(len(records)):
                line = child.stdout.readline()
                if line == "":
                    break
                labels.append(line.rstrip("\n"))
        return self._check_labels(labels, len(records))

    def close(self) -> None:
        if self._child is not None and self._child.poll() is None:
            self._child.stdin.close()
            self._child.wait(timeout=10)
        self._child = None


class HttpOracle(PredictionOracle):
    """POSTs a JSON array of record objects, expects a JSON array of labels."""

    kind = "http"

    def __init__(self, url: str, schema: Sequence[FeatureSchema], class_labels: Sequence[str],
                 timeout: float = 30.0):
        self._url = url
        self._schema = tuple(schema)
        self.class_labels = tuple(class_labels)
        self._timeout = timeout

    def predict(self, records: Sequence[Record]) -> list[str]:
        import httpx

        if len(records) == 0:
            return []
        payload = [
            {fs.name: cell for fs, cell in zip(self._schema, record)} for record in records
        ]
        try:
            response = httpx.post(self._url, json=payload, timeout=self._timeout)
            response.raise_for_status()
            labels = response.json()
        except httpx.HTTPError as exc:
            raise OracleError(f"oracle endpoint unavailable: {exc}") from exc
        if not isinstance(labels, list):
            raise OracleProtocolError("oracle endpoint did not return a JSON array")
        return self._check_labels([str(l) for l in labels], len(records))


@dataclass(frozen=True)
class ReferenceModelParams:
    n_trees: int = 10
    max_depth: int = 12
    seed: int = 0


class BaggedTreesOracle(PredictionOracle):
    """Bagged decision trees: deterministic, self-contained stand-in for the
    original model at desk scale."""

    kind = "builtin"

    def __init__(self, trees: Sequence[GeneralizerTree], schema: Sequence[FeatureSchema],
                 class_labels: Sequence[str], training_accuracy: float | None = None):
        self._trees = tuple(trees)
        self._schema = tuple(schema)
        self.class_labels = tuple(class_labels)
        self.training_accuracy = training_accuracy

    def predict_encoded(self, X: np.ndarray) -> np.ndarray:
        votes = np.zeros((len(X), len(self.class_labels)), dtype=np.int64)
        rows = np.arange(len(X))
        for tree in self._trees:
            votes[rows, predict_matrix(tree, X)] += 1
        return np.argmax(votes, axis=1)  # ties to the lowest class index

    def predict(self, records: Sequence[Record]) -> list[str]:
        if len(records) == 0:
            return []
        X = encode_records(self._schema, records)
        return [self.class_labels[i] for i in self.predict_encoded(X)]


def train_reference_model(
    train: Dataset, params: ReferenceModelParams = ReferenceModelParams()
) -> BaggedTreesOracle:
    """Fit the built-in bagged-tree oracle on a labeled split."""
    if train.labels is None:
        raise ConfigError("reference model training needs labels")
    if train.n_records == 0:
        raise EmptyDatasetError("reference model training needs records")

    class_labels = train.label_schema.domain.values
    if len(set(train.labels)) == 1:
        logger.warning("training labels are single-class; reference model is constant")

    rng = np.random.default_rng(params.seed)
    growth = GrowthParams(max_depth=params.max_depth, purity_required=False)
    trees = []
    n = train.n_records
    for _ in range(params.n_trees):
        sample = rng.integers(0, n, size=n)
        records = [train.records[i] for i in sample]
        labels = [train.labels[i] for i in sample]
        trees.append(
            fit_tree(train.feature_schemas, records, labels, growth, class_labels=class_labels)
        )

    oracle = BaggedTreesOracle(trees, train.feature_schemas, class_labels)
    predicted = oracle.predict_encoded(train.matrix)
    actual = np.array([class_labels.index(l) for l in train.labels])
    oracle.training_accuracy = float(np.mean(predicted == actual))
    return oracle


class MemoizingOracle(PredictionOracle):
    """Caches predictions keyed by record content; the minimization loop asks
    for the same representatives many times."""

    def __init__(self, inner: PredictionOracle):
        self._inner = inner
        self._cache: dict[Record, str] = {}
        self._lock = threading.Lock()
        self.kind = inner.kind
        self.class_labels = inner.class_labels
        self.supports_novel_records = inner.supports_novel_records

    def predict(self, records: Sequence[Record]) -> list[str]:
        with self._lock:
            missing = []
            seen = set()
            for r in records:
                if r not in self._cache and r not in seen:
                    missing.append(r)
                    seen.add(r)
            if missing:
                for r, label in zip(missing, self._inner.predict(missing)):
                    self._cache[r] = label
            return [self._cache[r] for r in records]


def null_accuracy(labels: Sequence[str]) -> float:
    """Accuracy of always predicting the most frequent class."""
    if len(labels) == 0:
        raise EmptyDatasetError("null accuracy needs at least one label")
    return Counter(labels).most_common(1)[0][1] / len(labels)
