"""Configuration validation, hashing and deterministic report emission."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from functools import lru_cache
from importlib import resources

import jsonschema

from . import __version__


class SchemaError(ValueError):
    """Configuration or report does not match its schema."""


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    text = resources.files("folnerlab").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(data: dict, name: str) -> None:
    try:
        jsonschema.validate(data, load_schema(name))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{name} schema violation at {where}: {exc.message}") from None


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: dict) -> str:
    """SHA-256 of the result-relevant part of a config (no outputs, no threads)."""
    core = {k: v for k, v in config.items() if k not in ("outputs", "threads")}
    return hashlib.sha256(canonical_json(core).encode()).hexdigest()


def _clean(v):
    """JSON-safe values: non-finite floats become strings, tuples lists."""
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return _clean(v.item())
    return v


def build_report(command: str, config: dict, columns: list, rows: list, summary: dict,
                 certified_radius=None, verification=None) -> dict:
    rep = {
        "command": command,
        "version": __version__,
        "config_hash": config_hash(config),
        "config": config,
        "certified_radius": certified_radius,
        "columns": list(columns),
        "rows": [{c: r.get(c) for c in columns} for r in rows],
        "summary": summary,
    }
    if verification is not None:
        rep["verification"] = verification
    rep = _clean(rep)
    validate(rep, "report")
    return rep


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, dict)):
        return canonical_json(v)
    return str(v)


def report_csv(rep: dict) -> str:
    """Header row, data rows, then a ``# key: value`` metadata block."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(rep["columns"])
    for row in rep["rows"]:
        wr.writerow([_cell(row.get(c)) for c in rep["columns"]])
    meta = {
        "command": rep["command"],
        "version": rep["version"],
        "config_hash": rep["config_hash"],
        "certified_radius": rep["certified_radius"],
    }
    if "seed" in rep["config"]:
        meta["seed"] = rep["config"]["seed"]
    if "rng_algorithm" in rep["summary"]:
        meta["rng_algorithm"] = rep["summary"]["rng_algorithm"]
    for k, v in meta.items():
        buf.write(f"# {k}: {_cell(v)}\n")
    return buf.getvalue()


def report_json(rep: dict) -> str:
    return json.dumps(rep, sort_keys=True, indent=2, allow_nan=False) + "\n"


def read_csv_report(text: str) -> tuple:
    """Parse a report CSV back into (columns, rows, metadata)."""
    data, meta = [], {}
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        elif line:
            data.append(line)
    rows = list(csv.reader(data))
    return rows[0], rows[1:], meta
