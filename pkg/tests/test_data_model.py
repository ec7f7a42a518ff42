import random

import pytest

from datamin.data_model import (
    CleanPolicy,
    Dataset,
    ImputeStats,
    SplitSpec,
    clean_dataset,
    impute_missing,
    load_dataset,
    save_dataset,
    schema_to_config,
    split_dataset,
    split_sizes,
)
from datamin.errors import ConfigError, EmptyDatasetError, ParseError, SchemaError

from .conftest import age_color_schema, make_age_color_dataset

SCHEMA_CONFIG = {
    "features": [
        {"name": "age", "kind": "numeric", "domain": {"lo": 0, "hi": 120}},
        {"name": "color", "kind": "categorical", "domain": {"values": ["blue", "green", "red"]}},
        {"name": "label", "kind": "categorical", "role": "label", "domain": {"values": ["0", "1"]}},
    ]
}


def write_csv(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadDataset:
    def test_explicit_domains(self, tmp_path):
        path = write_csv(tmp_path, "age,color,label\n20,red,0\n30,blue,1\n40,green,0\n")
        ds = load_dataset(path, SCHEMA_CONFIG)
        assert ds.n_features == 2
        assert ds.n_records == 3
        assert ds.label_schema.name == "label"
        assert ds.records[0] == (20.0, "red")
        assert ds.labels == ("0", "1", "0")

    def test_numeric_domain_inferred_from_observed(self, tmp_path):
        config = {
            "features": [
                {"name": "age", "kind": "numeric"},
                {"name": "label", "kind": "categorical", "role": "label"},
            ]
        }
        path = write_csv(tmp_path, "age,label\n20,x\n30,y\n40,x\n")
        ds = load_dataset(path, config)
        assert ds.feature_schemas[0].domain.lo == 20.0
        assert ds.feature_schemas[0].domain.hi == 40.0

    def test_unparsable_numeric_cell_names_row_and_column(self, tmp_path):
        path = write_csv(tmp_path, "age,color,label\n20,red,0\nabc,blue,1\n")
        with pytest.raises(ParseError, match=r"row 3.*'age'"):
            load_dataset(path, SCHEMA_CONFIG)

    def test_unknown_schema_column_rejected(self, tmp_path):
        path = write_csv(tmp_path, "age,label\n20,0\n")
        with pytest.raises(SchemaError, match="color"):
            load_dataset(path, SCHEMA_CONFIG)

    def test_missing_tokens_become_none(self, tmp_path):
        path = write_csv(tmp_path, "age,color,label\n?,red,0\n30,,1\n")
        ds = load_dataset(path, SCHEMA_CONFIG)
        assert ds.records[0][0] is None
        assert ds.records[1][1] is None

    def test_ignored_columns_are_skipped(self, tmp_path):
        config = {
            "features": [
                {"name": "age", "kind": "numeric"},
                {"name": "junk", "kind": "categorical", "role": "ignored"},
                {"name": "label", "kind": "categorical", "role": "label"},
            ]
        }
        path = write_csv(tmp_path, "age,junk,label\n20,zzz,x\n30,qqq,y\n")
        ds = load_dataset(path, config)
        assert ds.n_features == 1

    def test_round_trip(self, tmp_path):
        ds = make_age_color_dataset(
            [(20.5, "red"), (30, "blue"), (41.25, "green")], labels=["0", "1", "0"]
        )
        out = tmp_path / "saved.csv"
        save_dataset(ds, out)
        reloaded = load_dataset(out, schema_to_config(ds.schema))
        assert reloaded.records == ds.records
        assert reloaded.labels == ds.labels
        assert reloaded.schema == ds.schema


class TestCleanDataset:
    def test_records_without_label_dropped(self):
        ds = make_age_color_dataset(
            [(i, "red") for i in range(10)],
            labels=["0", None, "1", None, "0", None, "1", None, "0", "1"],
        )
        cleaned = clean_dataset(ds)
        assert cleaned.n_records == 6
        assert cleaned.clean_report.records_removed == 4

    def test_feature_over_missing_limit_dropped(self):
        records = [(None, "red")] * 6 + [(float(i), "blue") for i in range(4)]
        ds = Dataset(schema=age_color_schema(), records=tuple(records), labels=tuple(["0"] * 10))
        cleaned = clean_dataset(ds, CleanPolicy(max_missing_fraction=0.5))
        assert [fs.name for fs in cleaned.feature_schemas] == ["color"]
        assert cleaned.clean_report.dropped_features[0]["name"] == "age"

    def test_exactly_at_limit_kept(self):
        records = [(None, "red")] * 5 + [(float(i), "blue") for i in range(5)]
        ds = Dataset(schema=age_color_schema(), records=tuple(records), labels=tuple(["0"] * 10))
        cleaned = clean_dataset(ds, CleanPolicy(max_missing_fraction=0.5))
        assert cleaned.n_features == 2

    def test_clean_input_unchanged(self):
        ds = make_age_color_dataset([(20, "red"), (30, "blue")], labels=["0", "1"])
        cleaned = clean_dataset(ds)
        assert cleaned.records == ds.records
        assert cleaned.schema == ds.schema

    def test_all_records_dropped_is_an_error(self):
        ds = make_age_color_dataset([(20, "red")], labels=[None])
        with pytest.raises(EmptyDatasetError):
            clean_dataset(ds)

    def test_never_grows(self):
        rng = random.Random(5)
        for _ in range(10):
            n = rng.randint(1, 20)
            records = [
                (rng.choice([None, float(rng.randint(0, 99))]), rng.choice(["red", "blue"]))
                for _ in range(n)
            ]
            labels = [rng.choice([None, "0", "1"]) for _ in range(n)]
            ds = Dataset(schema=age_color_schema(), records=tuple(records), labels=tuple(labels))
            try:
                cleaned = clean_dataset(ds)
            except EmptyDatasetError:
                continue
            assert cleaned.n_records <= ds.n_records
            assert cleaned.n_features <= ds.n_features


class TestSplitDataset:
    def test_rounding_free_sizes(self):
        ds = make_age_color_dataset([(i, "red") for i in range(100)], labels=["0"] * 100)
        parts = split_dataset(ds, SplitSpec((0.4, 0.2, 0.2, 0.2), seed=7))
        assert [p.n_records for p in parts] == [40, 20, 20, 20]

    def test_largest_remainder_with_index_tie_break(self):
        assert split_sizes(10, (0.5, 0.25, 0.25, 0.0)) == [5, 3, 2, 0]

    def test_deterministic_for_fixed_seed(self):
        ds = make_age_color_dataset([(i, "red") for i in range(37)], labels=["0"] * 37)
        spec = SplitSpec((0.4, 0.2, 0.2, 0.2), seed=13)
        a = split_dataset(ds, spec)
        b = split_dataset(ds, spec)
        for x, y in zip(a, b):
            assert x.records == y.records

    def test_partition_preserves_record_multiset(self):
        rng = random.Random(2)
        rows = [(rng.randint(0, 5), rng.choice(["red", "blue"])) for _ in range(53)]
        ds = make_age_color_dataset(rows, labels=["0"] * 53)
        parts = split_dataset(ds, SplitSpec((0.3, 0.3, 0.2, 0.2), seed=1))
        combined = sorted(r for p in parts for r in p.records)
        assert combined == sorted(ds.records)

    def test_empty_required_split_rejected(self):
        ds = make_age_color_dataset([(1, "red")], labels=["0"])
        with pytest.raises(ConfigError):
            split_dataset(ds, SplitSpec((0.4, 0.2, 0.2, 0.2), seed=0))

    def test_bad_fractions_rejected(self):
        with pytest.raises(ConfigError):
            SplitSpec((0.5, 0.5, 0.5, 0.5))
        with pytest.raises(ConfigError):
            SplitSpec((1.0, 0.5, -0.5, 0.0))


class TestImpute:
    def test_median_and_mode_from_reference(self):
        reference = make_age_color_dataset(
            [(10, "red"), (20, "red"), (90, "blue")], labels=["0"] * 3
        )
        stats = ImputeStats.from_dataset(reference)
        ds = make_age_color_dataset([], labels=[])
        ds = Dataset(
            schema=ds.schema, records=((None, None), (50.0, "green")), labels=("0", "1")
        )
        filled = impute_missing(ds, stats)
        assert filled.records[0] == (20.0, "red")
        assert filled.records[1] == (50.0, "green")

    def test_mode_tie_broken_by_domain_order(self):
        reference = make_age_color_dataset([(1, "red"), (2, "blue")], labels=["0", "1"])
        stats = ImputeStats.from_dataset(reference)
        # blue and red tie; domain order is (blue, green, red)
        assert stats.fills[1] == "blue"
