"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion lines.
"""

import csv
import json
import os
import random
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from datamin.data_model import SplitSpec, split_dataset
from datamin.document import result_document
from datamin.generalization import (
    apply_generalization,
    cluster_profiles,
    derive_global,
    remove_feature,
    select_representatives,
)
from datamin.metrics import (
    disclosure_risk,
    ilag,
    ncp_categorical,
    ncp_dataset,
    ncp_numeric,
    relative_accuracy,
)
from datamin.minimize import MinimizationConfig, minimize
from datamin.oracle import null_accuracy, train_reference_model
from datamin.tree import fit_tree, prune_level

from ._brute import brute_disclosure_risk, brute_ncp
from .conftest import RuleOracle, make_age_color_dataset, random_dataset

ADULT_CSV = Path(__file__).resolve().parent.parent / "data" / "adult" / "adult.csv"


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL", flush=True)
        raise
    print(f"ACCEPTANCE {name}: PASS", flush=True)


def test_metric_oracle_equivalence():
    with criterion("metric-oracle-equivalence"):
        rng = random.Random(2024)
        started = time.monotonic()
        for _ in range(200):
            ds = random_dataset(rng, max_records=200, max_features=5)
            tree = fit_tree(
                ds.feature_schemas, ds.records, ds.labels,
                class_labels=ds.label_schema.domain.values,
            )
            gen = derive_global(tree)
            profiles = cluster_profiles(tree)
            report = ncp_dataset(gen, tree, profiles, ds.records)
            expected_records, expected_gcp = brute_ncp(
                gen, ds.feature_schemas, profiles, ds.records
            )
            assert abs(report.gcp - expected_gcp) < 1e-12
            for got, want in zip(report.per_record, expected_records):
                assert abs(got - want) < 1e-12

            qi = sorted(rng.sample(range(ds.n_features), rng.randint(1, ds.n_features)))
            risk = disclosure_risk(ds.records, qi)
            assert abs(risk - brute_disclosure_risk(ds.records, qi)) < 1e-12
        elapsed = time.monotonic() - started
        assert elapsed < 10.0, f"took {elapsed:.1f}s, budget is 10s"


def test_equation_arithmetic_spot_checks():
    with criterion("equation-spot-checks"):
        from datamin.data_model import CategoricalDomain, NumericDomain

        assert abs(ncp_numeric((20, 30), NumericDomain(0, 120)) - 10 / 120) < 1e-12
        assert ncp_categorical(("a",), CategoricalDomain(("a", "b", "c"))) == 0.0
        assert abs(ilag(0.4, 0.0) - 0.4) < 1e-12
        records = [("A",), ("A",), ("B",), ("C",)]
        assert abs(disclosure_risk(records, [0]) - 0.75) < 1e-12


def _imbalanced_splits():
    """Majority class '0' dominates every split, so the root representative's
    label is the modal prediction everywhere."""
    oracle = RuleOracle(lambda r: "1" if r[0] > 50 else "0", ("0", "1"))
    gen_split = make_age_color_dataset(
        [(a, c) for a, c in zip((5, 10, 15, 20, 30, 40, 45, 60, 70, 80),
                                ["red", "blue"] * 5)]
    )
    eval_split = make_age_color_dataset(
        [(a, c) for a, c in zip((2, 8, 22, 28, 33, 41, 47, 55, 75, 95),
                                ["green", "red"] * 5)]
    )
    return oracle, gen_split, eval_split


def test_endpoint_behavior():
    with criterion("endpoint-behavior"):
        oracle, gen_split, eval_split = _imbalanced_splits()
        labels = oracle.predict(gen_split.records)
        tree = fit_tree(gen_split.feature_schemas, gen_split.records, labels,
                        class_labels=oracle.class_labels)

        # identity generalization: untouch everything
        gen = derive_global(tree)
        profiles = select_representatives(
            tree, cluster_profiles(tree), list(gen_split.records), labels
        )
        identity = gen
        for j in range(gen_split.n_features):
            identity = remove_feature(identity, j)
        out = apply_generalization(identity, tree, profiles, list(eval_split.records))
        accuracy = relative_accuracy(oracle, list(eval_split.records), out)
        report = ncp_dataset(identity, tree, profiles, eval_split.records)
        assert accuracy.relative_accuracy == 1.0
        assert report.gcp == 0.0

        # prune-to-root generalization: everything suppressed
        root_tree = tree
        while root_tree.depth > 0:
            root_tree = prune_level(root_tree)
        root_gen = derive_global(root_tree)
        root_profiles = select_representatives(
            root_tree, cluster_profiles(root_tree), list(gen_split.records), labels
        )
        out = apply_generalization(root_gen, root_tree, root_profiles, list(eval_split.records))
        accuracy = relative_accuracy(oracle, list(eval_split.records), out)
        report = ncp_dataset(root_gen, root_tree, root_profiles, eval_split.records)
        assert report.gcp == 1.0
        assert accuracy.relative_accuracy == null_accuracy(
            oracle.predict(eval_split.records)
        )


def test_monotone_trace_and_determinism():
    with criterion("monotone-trace"):
        rng = random.Random(512)
        for trial in range(50):
            ds = random_dataset(rng, max_records=100, max_features=4, min_records=40)
            train, gen_split, opt_split, _ = split_dataset(
                ds, SplitSpec((0.4, 0.3, 0.3, 0.0), seed=trial)
            )
            oracle = train_reference_model(train)
            target = rng.choice([0.5, 0.7, 0.85, 0.95, 1.0])
            config = MinimizationConfig(target_relative_accuracy=target)

            result = minimize(gen_split, opt_split, oracle, config)
            prune_ncp = [r.ncp for r in result.trace if r.action == "prune"]
            assert prune_ncp == sorted(prune_ncp), "NCP must not decrease across prunes"
            assert result.accuracy.relative_accuracy >= target

            again = minimize(gen_split, opt_split, oracle, config)
            a = json.dumps(result_document(result, ds.schema, {"trial": trial}), sort_keys=True)
            b = json.dumps(result_document(again, ds.schema, {"trial": trial}), sort_keys=True)
            assert a == b, "two identical runs must produce byte-identical documents"


def test_suppression_discovery():
    with criterion("suppression-discovery"):
        oracle = RuleOracle(lambda r: "1" if r[0] > 50 else "0", ("0", "1"))
        gen_split = make_age_color_dataset(
            [(20, "blue"), (30, "red"), (40, "green"), (60, "red"), (70, "blue"), (80, "green")]
        )
        opt_split = make_age_color_dataset(
            [(10, "green"), (35, "blue"), (55, "red"), (90, "blue")]
        )
        result = minimize(gen_split, opt_split, oracle,
                          MinimizationConfig(target_relative_accuracy=1.0))
        color = result.generalization.features[1]
        assert color.status == "suppressed", "the ignored feature must be suppressed"
        assert result.accuracy.relative_accuracy == 1.0


def test_risk_reduction_property():
    with criterion("risk-reduction"):
        rng = random.Random(77)
        checked = 0
        for trial in range(15):
            ds = random_dataset(rng, max_records=120, max_features=4, min_records=60)
            train, gen_split, opt_split, val_split = split_dataset(
                ds, SplitSpec((0.3, 0.3, 0.2, 0.2), seed=trial)
            )
            oracle = train_reference_model(train)
            result = minimize(gen_split, opt_split, oracle,
                              MinimizationConfig(target_relative_accuracy=0.8))
            if all(fg.status == "untouched" for fg in result.generalization.features):
                continue
            checked += 1
            original = list(val_split.records)
            generalized = apply_generalization(
                result.generalization, result.tree, result.profiles, original
            )
            qi = list(range(ds.n_features))
            assert disclosure_risk(generalized, qi) <= disclosure_risk(original, qi) + 1e-15
        assert checked >= 5, "too few runs produced a generalization to check"


# --- desk-scale end-to-end ----------------------------------------------------

ADULT_SCHEMA = {
    "features": [
        {"name": "age", "kind": "numeric"},
        {"name": "workclass", "kind": "categorical"},
        {"name": "fnlwgt", "kind": "numeric", "role": "ignored"},
        {"name": "education", "kind": "categorical", "role": "ignored"},
        {"name": "education-num", "kind": "numeric"},
        {"name": "marital-status", "kind": "categorical"},
        {"name": "occupation", "kind": "categorical"},
        {"name": "relationship", "kind": "categorical"},
        {"name": "race", "kind": "categorical"},
        {"name": "sex", "kind": "categorical"},
        {"name": "capital-gain", "kind": "numeric"},
        {"name": "capital-loss", "kind": "numeric"},
        {"name": "hours-per-week", "kind": "numeric"},
        {"name": "native-country", "kind": "categorical"},
        {"name": "income", "kind": "categorical", "role": "label"},
    ]
}


def _run_desk_scale_pipeline(tmp_path, data_path, schema_config, name):
    from datamin.cli import main

    schema_path = tmp_path / f"{name}_schema.json"
    schema_path.write_text(json.dumps(schema_config))
    out = tmp_path / f"{name}_run"
    started = time.monotonic()
    code = main([
        "minimize", "--data", str(data_path), "--schema", str(schema_path),
        "--target-accuracy", "0.98", "--out", str(out), "--seed", "0",
    ])
    elapsed = time.monotonic() - started
    assert code == 0
    doc = json.loads((out / "result.json").read_text())
    return doc, elapsed


def _write_synthetic_adult_scale(path, n_rows=48842, seed=42):
    """Deterministic tabular set with the Adult shape: 5 numeric + 7 categorical
    features, binary label driven by axis-aligned rules plus 1.5% label noise."""
    rng = np.random.default_rng(seed)
    age = rng.integers(17, 91, n_rows)
    edu = rng.integers(1, 17, n_rows)
    gain = np.where(rng.random(n_rows) < 0.08, rng.integers(1000, 99999, n_rows), 0)
    loss = np.where(rng.random(n_rows) < 0.05, rng.integers(100, 4400, n_rows), 0)
    hours = rng.integers(1, 100, n_rows)
    cats = {
        "work": [f"w{i}" for i in range(8)],
        "marital": [f"m{i}" for i in range(7)],
        "occupation": [f"o{i}" for i in range(14)],
        "relationship": [f"r{i}" for i in range(6)],
        "race": [f"e{i}" for i in range(5)],
        "sex": ["F", "M"],
        "country": [f"c{i}" for i in range(20)],
    }
    cat_cols = {k: rng.integers(0, len(v), n_rows) for k, v in cats.items()}

    score = (
        0.035 * (age - 17)
        + 0.16 * edu
        + 2.2 * (gain > 5000)
        + 0.012 * hours
        + 1.1 * (cat_cols["marital"] <= 1)
        + 0.5 * (cat_cols["occupation"] <= 3)
    )
    label = (score > np.quantile(score, 0.72)).astype(int)
    flips = rng.random(n_rows) < 0.015
    label = np.where(flips, 1 - label, label)

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["age", "education-num", "capital-gain", "capital-loss", "hours-per-week"]
            + list(cats) + ["income"]
        )
        for i in range(n_rows):
            writer.writerow(
                [age[i], edu[i], gain[i], loss[i], hours[i]]
                + [cats[k][cat_cols[k][i]] for k in cats]
                + [str(label[i])]
            )


SYNTHETIC_SCHEMA = {
    "features": [
        {"name": "age", "kind": "numeric"},
        {"name": "education-num", "kind": "numeric"},
        {"name": "capital-gain", "kind": "numeric"},
        {"name": "capital-loss", "kind": "numeric"},
        {"name": "hours-per-week", "kind": "numeric"},
        {"name": "work", "kind": "categorical"},
        {"name": "marital", "kind": "categorical"},
        {"name": "occupation", "kind": "categorical"},
        {"name": "relationship", "kind": "categorical"},
        {"name": "race", "kind": "categorical"},
        {"name": "sex", "kind": "categorical"},
        {"name": "country", "kind": "categorical"},
        {"name": "income", "kind": "categorical", "role": "label"},
    ]
}


def test_desk_scale_synthetic_adult_shape(tmp_path):
    """48,842 rows x 12 features through the full CLI pipeline at target 0.98."""
    with criterion("desk-scale-synthetic"):
        data = tmp_path / "synthetic.csv"
        _write_synthetic_adult_scale(data)
        doc, elapsed = _run_desk_scale_pipeline(tmp_path, data, SYNTHETIC_SCHEMA, "synthetic")
        gcp = doc["optimization"]["ncp"]["gcp"]
        val_accuracy = doc["validation"]["accuracy"]["relative_accuracy"]
        print(
            f"  desk-scale synthetic: {elapsed:.1f}s, GCP={gcp:.4f}, "
            f"validation accuracy={val_accuracy:.4f}",
            flush=True,
        )
        assert elapsed < 300.0, f"pipeline took {elapsed:.0f}s, budget is 300s"
        assert gcp > 0.0
        assert val_accuracy >= 0.97


@pytest.mark.skipif(
    not ADULT_CSV.exists(),
    reason=(
        "the public Adult dataset is not available in this environment (no general "
        "network access; verified that only package mirrors are reachable). To run "
        "this criterion, place the 48,842-row CSV at data/adult/adult.csv as "
        "described in the README."
    ),
)
def test_desk_scale_public_adult(tmp_path):
    with criterion("desk-scale-adult"):
        with open(ADULT_CSV) as fh:
            n_rows = sum(1 for _ in fh) - 1
        assert n_rows == 48842, f"expected the full Adult dataset, found {n_rows} rows"
        doc, elapsed = _run_desk_scale_pipeline(tmp_path, ADULT_CSV, ADULT_SCHEMA, "adult")
        gcp = doc["optimization"]["ncp"]["gcp"]
        val_accuracy = doc["validation"]["accuracy"]["relative_accuracy"]
        print(
            f"  Adult: {elapsed:.1f}s, GCP={gcp:.4f}, validation accuracy={val_accuracy:.4f}",
            flush=True,
        )
        assert elapsed < 300.0
        assert gcp > 0.0
        assert val_accuracy >= 0.97
