import random

import pytest

from datamin.data_model import (
    CategoricalDomain,
    Dataset,
    FeatureSchema,
    NumericDomain,
)
from datamin.oracle import PredictionOracle


class RuleOracle(PredictionOracle):
    """Deterministic function-of-record oracle for tests."""

    kind = "rule"

    def __init__(self, fn, class_labels):
        self.fn = fn
        self.class_labels = tuple(class_labels)

    def predict(self, records):
        return [self.fn(r) for r in records]


def age_color_schema(age_domain=(0.0, 100.0), colors=("blue", "green", "red")):
    return (
        FeatureSchema("age", "numeric", NumericDomain(*age_domain)),
        FeatureSchema("color", "categorical", CategoricalDomain(tuple(colors))),
        FeatureSchema("label", "categorical", CategoricalDomain(("0", "1")), role="label"),
    )


def make_age_color_dataset(rows, labels=None):
    """rows: list of (age, color) tuples."""
    return Dataset(
        schema=age_color_schema(),
        records=tuple((float(a), c) for a, c in rows),
        labels=tuple(labels) if labels is not None else None,
    )


@pytest.fixture
def age_over_50_oracle():
    return RuleOracle(lambda r: "1" if r[0] > 50 else "0", ("0", "1"))


@pytest.fixture
def two_cluster_dataset():
    rows = [(20, "blue"), (30, "red"), (40, "green"), (60, "red"), (70, "blue"), (80, "green")]
    return make_age_color_dataset(rows)


def random_dataset(rng: random.Random, max_records=200, max_features=5, min_records=4):
    """Random small dataset with a mix of numeric and categorical features."""
    n_features = rng.randint(1, max_features)
    n_records = rng.randint(min_records, max_records)
    schema = []
    for j in range(n_features):
        if rng.random() < 0.5:
            lo = rng.uniform(-50, 0)
            hi = lo + rng.uniform(1, 100)
            schema.append(FeatureSchema(f"n{j}", "numeric", NumericDomain(lo, hi)))
        else:
            values = tuple(f"c{j}_{k}" for k in range(rng.randint(2, 5)))
            schema.append(FeatureSchema(f"k{j}", "categorical", CategoricalDomain(values)))
    n_classes = rng.randint(2, 3)
    class_labels = tuple(str(i) for i in range(n_classes))
    schema.append(
        FeatureSchema("label", "categorical", CategoricalDomain(class_labels), role="label")
    )

    records = []
    labels = []
    for _ in range(n_records):
        cells = []
        for fs in schema[:-1]:
            if fs.kind == "numeric":
                cells.append(rng.uniform(fs.domain.lo, fs.domain.hi))
            else:
                cells.append(rng.choice(fs.domain.values))
        records.append(tuple(cells))
        labels.append(rng.choice(class_labels))
    return Dataset(schema=tuple(schema), records=tuple(records), labels=tuple(labels))
