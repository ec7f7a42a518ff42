"""Result document: the JSON interchange format produced by a minimization run
and consumed by apply, evaluate, and the session service."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Sequence

from .data_model import (
    FeatureSchema,
    schema_from_config,
    schema_to_config,
)
from .errors import ConfigError
from .generalization import (
    STATUS_SUPPRESSED,
    STATUS_UNTOUCHED,
    ClusterProfile,
    Generalization,
    generalization_from_json,
    generalization_to_json,
    profiles_from_json,
    profiles_to_json,
)
from .minimize import MinimizationResult, TraceRow
from .tree import GeneralizerTree, tree_from_json, tree_to_json

FORMAT_VERSION = 1


def result_document(
    result: MinimizationResult,
    schema: Sequence[FeatureSchema],
    effective_config: dict,
    validation: dict | None = None,
) -> dict:
    feature_schemas = tuple(s for s in schema if s.role == "feature")
    names = [fs.name for fs in feature_schemas]
    doc = {
        "format_version": FORMAT_VERSION,
        "config": effective_config,
        "schema": schema_to_config(schema),
        "generalization": generalization_to_json(result.generalization, feature_schemas),
        "clusters": profiles_to_json(result.profiles, feature_schemas),
        "tree": tree_to_json(result.tree),
        "optimization": {
            "accuracy": result.accuracy.to_json(),
            "ncp": result.ncp.to_json(names),
        },
        "trace": [row.to_json() for row in result.trace],
    }
    if validation is not None:
        doc["validation"] = validation
    return doc


@dataclass(frozen=True)
class DocumentRuntime:
    """A frozen result document rebuilt into usable objects."""

    schema: tuple[FeatureSchema, ...]  # all entries, label included
    feature_schemas: tuple[FeatureSchema, ...]
    tree: GeneralizerTree
    profiles: tuple[ClusterProfile, ...]
    generalization: Generalization

    @classmethod
    def from_document(cls, doc: dict) -> "DocumentRuntime":
        if doc.get("format_version") != FORMAT_VERSION:
            raise ConfigError(
                f"unsupported document format version {doc.get('format_version')!r}"
            )
        try:
            entries, _ = schema_from_config(doc["schema"])
        except KeyError as exc:
            raise ConfigError(f"malformed document: missing {exc.args[0]!r}") from exc
        schema = tuple(entries)
        feature_schemas = tuple(s for s in schema if s.role == "feature")
        for fs in feature_schemas:
            if fs.domain is None:
                raise ConfigError(f"document schema must carry explicit domains ({fs.name!r})")
        try:
            tree = tree_from_json(doc["tree"], feature_schemas)
            profiles = tuple(profiles_from_json(doc["clusters"], feature_schemas))
            gen = generalization_from_json(doc["generalization"], feature_schemas)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed document: {exc}") from exc
        return cls(
            schema=schema,
            feature_schemas=feature_schemas,
            tree=tree,
            profiles=profiles,
            generalization=gen,
        )


def dump_document(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_document(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_trace_csv(trace: Sequence[TraceRow], path) -> None:
    """Plot-ready rows for accuracy-vs-NCP curves."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "action", "feature", "ncp", "relative_accuracy"])
        for i, row in enumerate(trace):
            writer.writerow([i, row.action, row.feature or "", row.ncp, row.relative_accuracy])


def _format_number(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:g}"


def summary_text(doc: dict) -> str:
    """Human-readable per-feature statuses in the style of a generalization table."""
    lines = []
    opt = doc["optimization"]
    lines.append(f"relative accuracy (optimization split): {opt['accuracy']['relative_accuracy']:.4f}")
    if "validation" in doc:
        val = doc["validation"]
        lines.append(f"relative accuracy (validation split):   {val['accuracy']['relative_accuracy']:.4f}")
        lines.append(f"GCP (validation split): {val['ncp']['gcp']:.6f}")
    lines.append(f"GCP (optimization split): {opt['ncp']['gcp']:.6f}")
    lines.append("")
    lines.append("feature statuses:")
    for item in doc["generalization"]["features"]:
        name = item["name"]
        status = item["status"]
        if status == STATUS_SUPPRESSED:
            lines.append(f"  {name}: Not needed")
        elif status == STATUS_UNTOUCHED:
            lines.append(f"  {name}: Not generalized")
        elif "ranges" in item:
            ranges = item["ranges"]
            if len(ranges) <= 8:
                parts = ", ".join(
                    f"[{_format_number(r['start'])}, {_format_number(r['end'])}]" for r in ranges
                )
                lines.append(f"  {name}: {parts}")
            else:
                lo = _format_number(ranges[0]["start"])
                hi = _format_number(ranges[-1]["end"])
                lines.append(f"  {name}: {len(ranges)} ranges covering {lo}-{hi}")
        else:
            parts = ", ".join("[" + ", ".join(g) + "]" for g in item["groups"])
            lines.append(f"  {name}: {parts}")
    return "\n".join(lines) + "\n"
