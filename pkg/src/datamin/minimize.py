"""The minimization loop: fit the generalizer, derive a generalization, then
prune levels or un-generalize features until the accuracy target is met."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data_model import Dataset, decode_row
from .errors import ConfigError, EmptyDatasetError, IterationCapError
from .generalization import (
    STATUS_UNTOUCHED,
    ClusterProfile,
    Generalization,
    apply_generalization,
    apply_generalization_matrix,
    cluster_profiles,
    derive_global,
    remove_feature,
    representatives_matrix,
    select_representatives,
)
from .metrics import AccuracyReport, NcpReport, ilag, ncp_dataset, relative_accuracy
from .oracle import MemoizingOracle, PredictionOracle
from .tree import GeneralizerTree, GrowthParams, fit_tree, prune_level, route_matrix


@dataclass(frozen=True)
class MinimizationConfig:
    target_relative_accuracy: float
    growth: GrowthParams = GrowthParams()
    max_iterations: int = 1000
    weights: tuple | None = None
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.target_relative_accuracy <= 1):
            raise ConfigError("target relative accuracy must be in (0, 1]")


@dataclass(frozen=True)
class TraceRow:
    action: str  # fit | prune | remove
    feature: str | None
    ncp: float
    relative_accuracy: float

    def to_json(self) -> dict:
        return {
            "action": self.action,
            "feature": self.feature,
            "ncp": self.ncp,
            "relative_accuracy": self.relative_accuracy,
        }


@dataclass(frozen=True)
class MinimizationResult:
    generalization: Generalization
    profiles: tuple[ClusterProfile, ...]
    tree: GeneralizerTree
    accuracy: AccuracyReport  # on the optimization split
    ncp: NcpReport
    trace: tuple[TraceRow, ...]


@dataclass
class _State:
    tree: GeneralizerTree
    gen: Generalization
    profiles: tuple[ClusterProfile, ...]
    rep_matrix: np.ndarray
    leaf_ids: np.ndarray | None = None  # routing of the optimization split


class _Evaluator:
    """Relative accuracy of generalization states against one optimization split."""

    def __init__(self, optimize: Dataset, oracle: PredictionOracle):
        self.records = optimize.records
        self.X = optimize.matrix
        self.oracle = oracle
        self.fast = hasattr(oracle, "predict_encoded")
        if self.fast:
            self.original = oracle.predict_encoded(self.X)
        else:
            self.original = oracle.predict(list(self.records))

    def accuracy(self, state: _State) -> AccuracyReport:
        if state.leaf_ids is None:
            state.leaf_ids = route_matrix(state.tree, self.X)
        X_gen = apply_generalization_matrix(state.gen, state.leaf_ids, self.X, state.rep_matrix)
        if self.fast:
            predicted = self.oracle.predict_encoded(X_gen)
            matches = int(np.sum(predicted == self.original))
        else:
            generalized = [decode_row(state.tree.schema, row) for row in X_gen]
            predicted = self.oracle.predict(generalized)
            matches = sum(1 for a, b in zip(predicted, self.original) if a == b)
        return AccuracyReport.from_counts(matches, len(self.records))


def _build_state(tree: GeneralizerTree, records, labels) -> _State:
    profiles = tuple(select_representatives(tree, cluster_profiles(tree), records, labels))
    return _State(
        tree=tree,
        gen=derive_global(tree),
        profiles=profiles,
        rep_matrix=representatives_matrix(tree.schema, profiles),
    )


def minimize(
    generalizer_split: Dataset,
    optimize_split: Dataset,
    oracle: PredictionOracle,
    config: MinimizationConfig,
) -> MinimizationResult:
    """Run the full minimization process and return the final state plus its trace.

    The trace records only committed states: a prune evaluated below the target
    is rolled back and leaves no row.
    """
    if generalizer_split.n_records == 0 or optimize_split.n_records == 0:
        raise EmptyDatasetError("minimization needs non-empty generalizer and optimization splits")
    if not oracle.supports_novel_records:
        raise ConfigError(
            f"{oracle.kind} oracle cannot label generalized records; "
            "use a builtin, subprocess, or http oracle"
        )
    if not hasattr(oracle, "predict_encoded") and not isinstance(oracle, MemoizingOracle):
        oracle = MemoizingOracle(oracle)

    schema = generalizer_split.feature_schemas
    gen_records = list(generalizer_split.records)
    gen_labels = oracle.predict(gen_records)

    tree = fit_tree(schema, gen_records, gen_labels, config.growth, class_labels=oracle.class_labels)
    evaluator = _Evaluator(optimize_split, oracle)

    state = _build_state(tree, gen_records, gen_labels)
    accuracy = evaluator.accuracy(state)
    report = ncp_dataset(state.gen, state.tree, state.profiles, optimize_split.records, config.weights)
    trace = [TraceRow("fit", None, report.gcp, accuracy.relative_accuracy)]
    target = config.target_relative_accuracy

    def check_cap():
        if len(trace) >= config.max_iterations:
            raise IterationCapError(
                f"minimization exceeded {config.max_iterations} iterations", trace
            )

    if accuracy.relative_accuracy >= target:
        # improve the generalization: go up one level at a time, roll back the
        # prune that undershoots the target
        while state.tree.depth > 0:
            check_cap()
            candidate = _build_state(prune_level(state.tree), gen_records, gen_labels)
            cand_accuracy = evaluator.accuracy(candidate)
            if cand_accuracy.relative_accuracy < target:
                break
            state, accuracy = candidate, cand_accuracy
            report = ncp_dataset(
                state.gen, state.tree, state.profiles, optimize_split.records, config.weights
            )
            trace.append(TraceRow("prune", None, report.gcp, accuracy.relative_accuracy))
    else:
        # improve the accuracy: drop the feature with the lowest information
        # loss per unit of accuracy gained
        while accuracy.relative_accuracy < target:
            candidates = [
                fg.feature for fg in state.gen.features if fg.status != STATUS_UNTOUCHED
            ]
            if not candidates:
                break
            check_cap()
            base = accuracy.relative_accuracy
            best = None
            for j in candidates:  # ascending index doubles as the tie-break
                cand_gen = remove_feature(state.gen, j)
                cand_accuracy = evaluator.accuracy(_with_gen(state, cand_gen))
                gain = cand_accuracy.relative_accuracy - base
                score = ilag(report.per_feature[j], gain)
                if best is None or score < best[0]:
                    best = (score, j, cand_gen, cand_accuracy)
            _, j, state.gen, accuracy = best
            report = ncp_dataset(
                state.gen, state.tree, state.profiles, optimize_split.records, config.weights
            )
            trace.append(
                TraceRow("remove", schema[j].name, report.gcp, accuracy.relative_accuracy)
            )

    return MinimizationResult(
        generalization=state.gen,
        profiles=state.profiles,
        tree=state.tree,
        accuracy=accuracy,
        ncp=report,
        trace=tuple(trace),
    )


def _with_gen(state: _State, gen: Generalization) -> _State:
    return _State(
        tree=state.tree,
        gen=gen,
        profiles=state.profiles,
        rep_matrix=state.rep_matrix,
        leaf_ids=state.leaf_ids,
    )


def accuracy_gain(
    gen: Generalization,
    tree: GeneralizerTree,
    profiles: Sequence[ClusterProfile],
    feature: int,
    optimize_split: Dataset,
    oracle: PredictionOracle,
) -> float:
    """Relative accuracy with the feature untouched minus the current relative
    accuracy, everything else held fixed."""
    if gen.features[feature].status == STATUS_UNTOUCHED:
        raise ConfigError(f"feature {feature} is already untouched")
    records = list(optimize_split.records)
    current = relative_accuracy(
        oracle, records, apply_generalization(gen, tree, profiles, records)
    )
    candidate = relative_accuracy(
        oracle,
        records,
        apply_generalization(remove_feature(gen, feature), tree, profiles, records),
    )
    return candidate.relative_accuracy - current.relative_accuracy


def validate(
    result: MinimizationResult, validation_split: Dataset, oracle: PredictionOracle
) -> tuple[AccuracyReport, NcpReport]:
    """Apply the frozen generalization to a held-out split; no further adaptation."""
    records = list(validation_split.records)
    generalized = apply_generalization(result.generalization, result.tree, result.profiles, records)
    accuracy = relative_accuracy(oracle, records, generalized)
    report = ncp_dataset(
        result.generalization, result.tree, result.profiles, records, result.ncp.weights
    )
    return accuracy, report
