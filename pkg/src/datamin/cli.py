"""Command-line surface: minimize a dataset, apply/evaluate a frozen
generalization, score disclosure risk, and serve the session API."""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .data_model import (
    NUMERIC,
    CleanPolicy,
    ImputeStats,
    SplitSpec,
    clean_dataset,
    impute_missing,
    load_dataset,
    load_schema_config,
    split_dataset,
)
from .document import (
    DocumentRuntime,
    dump_document,
    load_document,
    result_document,
    summary_text,
    write_trace_csv,
)
from .errors import (
    ConfigError,
    DataminError,
    EmptyDatasetError,
    OracleError,
    ParseError,
    SchemaError,
)
from .generalization import apply_generalization
from .metrics import disclosure_risk, ncp_dataset, relative_accuracy
from .minimize import MinimizationConfig, minimize, validate
from .oracle import (
    HttpOracle,
    ReferenceModelParams,
    SubprocessOracle,
    train_reference_model,
)
from .tree import GrowthParams

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_ORACLE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="datamin",
        description="Data minimization for ML models: generalize input features "
        "as far as the model's accuracy allows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("minimize", help="run the full minimization pipeline")
    p.add_argument("--data", required=True, help="input CSV (header row required)")
    p.add_argument("--schema", required=True, help="schema config JSON")
    p.add_argument(
        "--oracle",
        default="builtin",
        help="oracle spec: builtin[:k=v,...] | subprocess:<command> | http:<url>",
    )
    p.add_argument("--target-accuracy", type=float, required=True)
    p.add_argument("--splits", default="0.4,0.2,0.2,0.2",
                   help="four comma-separated fractions summing to 1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--weights", default=None, help="comma-separated per-feature NCP weights")
    p.add_argument("--max-missing", type=float, default=0.5,
                   help="drop features with more than this fraction missing")
    p.add_argument("--max-depth", type=int, default=30, help="generalizer tree safety depth")

    p = sub.add_parser("apply", help="generalize a CSV with a frozen result document")
    p.add_argument("--document", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output CSV path")

    p = sub.add_parser("evaluate", help="accuracy and information-loss reports for a CSV")
    p.add_argument("--document", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--oracle", required=True,
                   help="builtin[:k=v,...] (needs --train-data) | subprocess:<command> | http:<url>")
    p.add_argument("--train-data", default=None,
                   help="labeled CSV to retrain the builtin reference oracle on")
    p.add_argument("--out", default=None, help="report JSON path (default: stdout)")

    p = sub.add_parser("risk", help="disclosure risk of a CSV over quasi-identifier columns")
    p.add_argument("--data", required=True)
    p.add_argument("--qi", required=True, help="comma-separated quasi-identifier columns")
    p.add_argument("--out", default=None, help="report JSON path (default: stdout)")

    p = sub.add_parser("serve", help="serve the personalized-minimization session API")
    p.add_argument("--document", required=True)
    p.add_argument("--serve-port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--session-timeout", type=float, default=1800.0)
    p.add_argument("--session-log", default=None)
    p.add_argument("--frontend", default=None, help="static asset directory to mount at /ui")

    return parser


def _parse_oracle_spec(spec: str) -> tuple[str, str]:
    for kind in ("builtin", "precomputed", "subprocess", "http"):
        if spec == kind:
            return kind, ""
        if spec.startswith(kind + ":"):
            return kind, spec[len(kind) + 1 :]
    raise ConfigError(f"unknown oracle spec {spec!r}")


def _builtin_params(arg: str, default_seed: int) -> ReferenceModelParams:
    params = {"n_trees": 10, "max_depth": 12, "seed": default_seed}
    if arg:
        for part in arg.split(","):
            key, _, value = part.partition("=")
            if key not in params:
                raise ConfigError(f"unknown builtin oracle parameter {key!r}")
            params[key] = int(value)
    return ReferenceModelParams(**params)


def _make_external_oracle(kind: str, arg: str, feature_schemas, class_labels):
    if kind == "subprocess":
        if not arg:
            raise ConfigError("subprocess oracle needs a command")
        return SubprocessOracle(arg, feature_schemas, class_labels)
    if not arg:
        raise ConfigError("http oracle needs a URL")
    return HttpOracle(arg, feature_schemas, class_labels)


def _parse_fractions(text: str) -> tuple[float, ...]:
    try:
        fractions = tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"cannot parse split fractions {text!r}")
    return fractions


def cmd_minimize(args) -> int:
    try:
        schema_config = load_schema_config(args.schema)
    except FileNotFoundError:
        raise ConfigError(f"schema file not found: {args.schema}")
    ds = load_dataset(args.data, schema_config)
    ds = clean_dataset(ds, CleanPolicy(max_missing_fraction=args.max_missing))

    spec = SplitSpec(fractions=_parse_fractions(args.splits), seed=args.seed)
    train, generalizer, optimize, validation = split_dataset(ds, spec)
    stats = ImputeStats.from_dataset(generalizer)
    train, generalizer, optimize, validation = (
        impute_missing(s, stats) for s in (train, generalizer, optimize, validation)
    )

    kind, arg = _parse_oracle_spec(args.oracle)
    if kind == "precomputed":
        raise ConfigError(
            "a precomputed oracle answers by position and cannot score generalized "
            "records; use builtin, subprocess, or http"
        )
    if kind == "builtin":
        oracle = train_reference_model(train, _builtin_params(arg, args.seed))
    else:
        oracle = _make_external_oracle(
            kind, arg, ds.feature_schemas, ds.label_schema.domain.values
        )

    weights = None
    if args.weights:
        weights = tuple(float(x) for x in args.weights.split(","))
    config = MinimizationConfig(
        target_relative_accuracy=args.target_accuracy,
        growth=GrowthParams(max_depth=args.max_depth),
        weights=weights,
        seed=args.seed,
    )
    result = minimize(generalizer, optimize, oracle, config)
    val_accuracy, val_ncp = validate(result, validation, oracle)

    feature_names = [fs.name for fs in ds.feature_schemas]
    effective_config = {
        "data": args.data,
        "schema": args.schema,
        "oracle": args.oracle,
        "target_accuracy": args.target_accuracy,
        "splits": {"fractions": list(spec.fractions), "seed": spec.seed},
        "seed": args.seed,
        "weights": list(weights) if weights else None,
        "max_missing_fraction": args.max_missing,
        "max_depth": args.max_depth,
    }
    doc = result_document(
        result,
        ds.schema,
        effective_config,
        validation={
            "accuracy": val_accuracy.to_json(),
            "ncp": val_ncp.to_json(feature_names),
        },
    )

    os.makedirs(args.out, exist_ok=True)
    dump_document(doc, os.path.join(args.out, "result.json"))
    write_trace_csv(result.trace, os.path.join(args.out, "trace.csv"))
    summary = summary_text(doc)
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary)
    if ds.clean_report is not None:
        with open(os.path.join(args.out, "clean_report.json"), "w", encoding="utf-8") as fh:
            json.dump(ds.clean_report.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(summary, end="")
    return EXIT_OK


def _read_csv_records(path, runtime: DocumentRuntime):
    """Parse feature cells per the document schema; pass other columns through."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, header row required")
        rows = list(reader)

    col_of = {name: i for i, name in enumerate(header)}
    for fs in runtime.feature_schemas:
        if fs.name not in col_of:
            raise SchemaError(f"document feature {fs.name!r} not present in CSV header")

    records = []
    for row_no, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise ParseError(f"row {row_no}: expected {len(header)} cells, got {len(row)}")
        cells = []
        for fs in runtime.feature_schemas:
            raw = row[col_of[fs.name]]
            if fs.kind == NUMERIC:
                try:
                    value = float(raw)
                except ValueError:
                    raise ParseError(
                        f"row {row_no}, column {fs.name!r}: cannot parse {raw!r} as numeric"
                    )
            else:
                value = raw
                if not fs.domain.contains(value):
                    raise ParseError(
                        f"row {row_no}, column {fs.name!r}: value {value!r} outside domain"
                    )
            cells.append(value)
        records.append(tuple(cells))
    return header, rows, records


def _format_cell(value) -> str:
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    return str(value)


def cmd_apply(args) -> int:
    runtime = DocumentRuntime.from_document(load_document(args.document))
    header, rows, records = _read_csv_records(args.data, runtime)
    generalized = apply_generalization(
        runtime.generalization, runtime.tree, runtime.profiles, records
    )
    col_of = {name: i for i, name in enumerate(header)}
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row, record in zip(rows, generalized):
            out_row = list(row)
            for fs, cell in zip(runtime.feature_schemas, record):
                out_row[col_of[fs.name]] = _format_cell(cell)
            writer.writerow(out_row)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    runtime = DocumentRuntime.from_document(load_document(args.document))
    _, _, records = _read_csv_records(args.data, runtime)

    kind, arg = _parse_oracle_spec(args.oracle)
    label_domain = next(s for s in runtime.schema if s.role == "label").domain.values
    if kind == "precomputed":
        raise ConfigError("evaluate needs an oracle that can score generalized records")
    if kind == "builtin":
        if not args.train_data:
            raise ConfigError("builtin oracle for evaluate needs --train-data")
        from .data_model import schema_to_config

        train = load_dataset(args.train_data, schema_to_config(runtime.schema))
        oracle = train_reference_model(train, _builtin_params(arg, 0))
    else:
        oracle = _make_external_oracle(kind, arg, runtime.feature_schemas, label_domain)

    generalized = apply_generalization(
        runtime.generalization, runtime.tree, runtime.profiles, records
    )
    accuracy = relative_accuracy(oracle, records, generalized)
    report = ncp_dataset(runtime.generalization, runtime.tree, runtime.profiles, records)
    payload = {
        "accuracy": accuracy.to_json(),
        "ncp": report.to_json([fs.name for fs in runtime.feature_schemas]),
    }
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_risk(args) -> int:
    with open(args.data, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{args.data}: empty file, header row required")
        rows = [tuple(row) for row in reader]

    qi_names = [name for name in args.qi.split(",") if name]
    col_of = {name: i for i, name in enumerate(header)}
    for name in qi_names:
        if name not in col_of:
            raise ConfigError(f"quasi-identifier column {name!r} not in CSV header")
    qi = [col_of[name] for name in qi_names]

    risk = disclosure_risk(rows, qi)
    distinct = len({tuple(r[j] for j in qi) for r in rows})
    payload = {"risk": risk, "distinct_combinations": distinct, "records": len(rows)}
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    document = load_document(args.document)
    app = create_app(
        document,
        session_timeout=args.session_timeout,
        session_log=args.session_log,
        frontend_dir=args.frontend,
    )
    uvicorn.run(app, host=args.host, port=args.serve_port)
    return EXIT_OK


_COMMANDS = {
    "minimize": cmd_minimize,
    "apply": cmd_apply,
    "evaluate": cmd_evaluate,
    "risk": cmd_risk,
    "serve": cmd_serve,
}


def _fail(code: str, message: str, exit_code: int) -> int:
    sys.stderr.write(json.dumps({"error": {"code": code, "message": message}}) + "\n")
    return exit_code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, SchemaError) as exc:
        return _fail("config_error", str(exc), EXIT_CONFIG)
    except (ParseError, EmptyDatasetError) as exc:
        return _fail("data_error", str(exc), EXIT_DATA)
    except OracleError as exc:
        return _fail("oracle_error", str(exc), EXIT_ORACLE)
    except FileNotFoundError as exc:
        return _fail("config_error", str(exc), EXIT_CONFIG)
    except DataminError as exc:
        return _fail("error", str(exc), EXIT_ERROR)


if __name__ == "__main__":
    sys.exit(main())
