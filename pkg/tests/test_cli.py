import json
import os
import random
import sys

import pytest

from datamin.cli import main

from .test_session import two_cluster_document

CHILD = os.path.join(os.path.dirname(__file__), "oracle_child.py")

SCHEMA = {
    "features": [
        {"name": "age", "kind": "numeric", "domain": {"lo": 0, "hi": 100}},
        {"name": "color", "kind": "categorical",
         "domain": {"values": ["blue", "green", "red"]}},
        {"name": "label", "kind": "categorical", "role": "label",
         "domain": {"values": ["0", "1"]}},
    ]
}


def write_toy_inputs(tmp_path, n=40, seed=1):
    rng = random.Random(seed)
    lines = ["age,color,label"]
    for _ in range(n):
        age = rng.randint(0, 100)
        color = rng.choice(["blue", "green", "red"])
        lines.append(f"{age},{color},{'1' if age > 50 else '0'}")
    data = tmp_path / "toy.csv"
    data.write_text("\n".join(lines) + "\n")
    schema = tmp_path / "schema.json"
    schema.write_text(json.dumps(SCHEMA))
    return data, schema


class TestMinimizeCommand:
    def test_end_to_end_writes_result_files(self, tmp_path, capsys):
        data, schema = write_toy_inputs(tmp_path)
        out = tmp_path / "run"
        code = main([
            "minimize", "--data", str(data), "--schema", str(schema),
            "--target-accuracy", "0.98", "--out", str(out), "--seed", "3",
        ])
        assert code == 0
        assert (out / "result.json").exists()
        assert (out / "trace.csv").exists()
        assert (out / "summary.txt").exists()
        doc = json.loads((out / "result.json").read_text())
        assert doc["optimization"]["accuracy"]["relative_accuracy"] >= 0.98
        summary = capsys.readouterr().out
        assert "feature statuses:" in summary
        trace_lines = (out / "trace.csv").read_text().splitlines()
        assert trace_lines[0] == "step,action,feature,ncp,relative_accuracy"

    def test_same_config_twice_gives_identical_bytes(self, tmp_path):
        data, schema = write_toy_inputs(tmp_path)
        outputs = []
        for name in ("a", "b"):
            out = tmp_path / name
            code = main([
                "minimize", "--data", str(data), "--schema", str(schema),
                "--target-accuracy", "0.9", "--out", str(out), "--seed", "11",
            ])
            assert code == 0
            outputs.append((out / "result.json").read_bytes())
        assert outputs[0] == outputs[1]

    def test_missing_schema_file_exits_with_config_code(self, tmp_path, capsys):
        data, _ = write_toy_inputs(tmp_path)
        code = main([
            "minimize", "--data", str(data), "--schema", str(tmp_path / "nope.json"),
            "--target-accuracy", "0.9", "--out", str(tmp_path / "x"),
        ])
        assert code == 2
        error = json.loads(capsys.readouterr().err)
        assert error["error"]["code"] == "config_error"

    def test_precomputed_oracle_rejected(self, tmp_path):
        data, schema = write_toy_inputs(tmp_path)
        code = main([
            "minimize", "--data", str(data), "--schema", str(schema),
            "--oracle", "precomputed:label",
            "--target-accuracy", "0.9", "--out", str(tmp_path / "x"),
        ])
        assert code == 2

    def test_subprocess_oracle_drives_the_pipeline(self, tmp_path):
        data, schema = write_toy_inputs(tmp_path)
        out = tmp_path / "sub"
        code = main([
            "minimize", "--data", str(data), "--schema", str(schema),
            "--oracle", f"subprocess:{sys.executable} {CHILD}",
            "--target-accuracy", "1.0", "--out", str(out),
        ])
        assert code == 0
        doc = json.loads((out / "result.json").read_text())
        # the child ignores color entirely, so color cannot stay generalized
        color = next(f for f in doc["generalization"]["features"] if f["name"] == "color")
        assert color["status"] in ("suppressed", "untouched")
        assert doc["optimization"]["accuracy"]["relative_accuracy"] == 1.0


class TestApplyCommand:
    def test_identity_document_reproduces_the_input(self, tmp_path):
        doc = two_cluster_document()
        for item in doc["generalization"]["features"]:
            item["status"] = "untouched"
            item.pop("ranges", None)
            item.pop("groups", None)
        doc_path = tmp_path / "doc.json"
        doc_path.write_text(json.dumps(doc))
        data = tmp_path / "in.csv"
        data.write_text("age,color\n20,red\n61.5,blue\n")
        out = tmp_path / "out.csv"
        assert main(["apply", "--document", str(doc_path), "--data", str(data),
                     "--out", str(out)]) == 0
        assert out.read_text() == data.read_text()

    def test_two_cluster_document_maps_rows_to_representatives(self, tmp_path):
        doc_path = tmp_path / "doc.json"
        doc_path.write_text(json.dumps(two_cluster_document()))
        data = tmp_path / "in.csv"
        data.write_text("age,color\n10,red\n20,blue\n70,green\n90,red\n")
        out = tmp_path / "out.csv"
        assert main(["apply", "--document", str(doc_path), "--data", str(data),
                     "--out", str(out)]) == 0
        rows = out.read_text().splitlines()[1:]
        assert rows[0] == rows[1]
        assert rows[2] == rows[3]
        assert rows[0] != rows[2]

    def test_schema_mismatch_is_a_config_error(self, tmp_path, capsys):
        doc_path = tmp_path / "doc.json"
        doc_path.write_text(json.dumps(two_cluster_document()))
        data = tmp_path / "in.csv"
        data.write_text("age\n10\n")
        code = main(["apply", "--document", str(doc_path), "--data", str(data),
                     "--out", str(tmp_path / "out.csv")])
        assert code == 2


class TestEvaluateCommand:
    def test_reports_accuracy_and_ncp(self, tmp_path, capsys):
        doc_path = tmp_path / "doc.json"
        doc_path.write_text(json.dumps(two_cluster_document()))
        data = tmp_path / "in.csv"
        data.write_text("age,color\n10,red\n20,blue\n70,green\n90,red\n")
        code = main([
            "evaluate", "--document", str(doc_path), "--data", str(data),
            "--oracle", f"subprocess:{sys.executable} {CHILD}",
        ])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["accuracy"]["relative_accuracy"] == 1.0
        assert 0.0 <= payload["ncp"]["gcp"] <= 1.0


class TestRiskCommand:
    def test_known_toy_value(self, tmp_path, capsys):
        data = tmp_path / "r.csv"
        data.write_text("q\nA\nA\nB\nC\n")
        assert main(["risk", "--data", str(data), "--qi", "q"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["risk"] == pytest.approx(0.75, abs=1e-12)
        assert payload["distinct_combinations"] == 3

    def test_unique_rows(self, tmp_path, capsys):
        data = tmp_path / "r.csv"
        data.write_text("a,b\n1,x\n2,y\n3,z\n")
        assert main(["risk", "--data", str(data), "--qi", "a,b"]) == 0
        assert json.loads(capsys.readouterr().out)["risk"] == 1.0

    def test_unknown_column_is_a_config_error(self, tmp_path, capsys):
        data = tmp_path / "r.csv"
        data.write_text("a\n1\n")
        assert main(["risk", "--data", str(data), "--qi", "zzz"]) == 2
