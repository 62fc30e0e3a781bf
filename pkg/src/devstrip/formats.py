"""File formats: JSON documents, CSV tables and OBJ meshes.

Every writer returns text; nothing touches the disk until
:func:`write_files` has validated all documents of a run, so a failing run
leaves no partial output. Floats are written with 17 significant digits,
which round-trips IEEE doubles exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os

import jsonschema
import numpy as np

from .exceptions import DevstripError, InputError


class OutputValidationError(DevstripError):
    """A generated document does not match its schema."""


def format_float(x):
    return format(float(x), ".17g")


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        return ("[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in seq)
                + "\n" + end + "]")
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        if not math.isfinite(obj):
            raise OutputValidationError(f"non-finite number {obj!r} in JSON output")
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with 17-significant-digit floats and a trailing newline."""
    return _encode(obj, indent, 0) + "\n"


# ---------------------------------------------------------------------------
# Schemas
# ---------------------------------------------------------------------------

_NUM = {"type": "number"}
_POINT = {"type": "array", "items": _NUM, "minItems": 3, "maxItems": 3}
_NUMS = {"type": "array", "items": _NUM}
_INTERVAL = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}

CURVE_SCHEMA = {
    "type": "object",
    "required": ["degree", "knots", "points"],
    "properties": {
        "degree": {"type": "integer", "minimum": 1},
        "knots": {**_NUMS, "minItems": 4},
        "points": {"type": "array", "items": _POINT, "minItems": 2},
    },
}

CURVES_SCHEMA = {
    "type": "object",
    "required": ["c1", "c2"],
    "properties": {"c1": CURVE_SCHEMA, "c2": CURVE_SCHEMA},
}

MAPPING_SCHEMA = {
    "type": "object",
    "required": ["degree", "knots", "epsilons"],
    "properties": {
        "degree": {"type": "integer", "minimum": 1},
        "knots": {**_NUMS, "minItems": 4},
        "epsilons": {**_NUMS, "minItems": 2},
    },
}

POLYLINE_SCHEMA = {"type": "array", "items": _POINT, "minItems": 2}

POLYLINES_SCHEMA = {
    "oneOf": [
        POLYLINE_SCHEMA,
        {"type": "object", "required": ["c1", "c2"],
         "properties": {"c1": POLYLINE_SCHEMA, "c2": POLYLINE_SCHEMA}},
    ]
}

RESULT_SCHEMA = {
    "type": "object",
    "required": ["mode", "mapping", "c1", "c2", "transform", "original_intervals",
                 "status", "converged", "iterations", "beta_max", "beta_ave", "config"],
    "properties": {
        "mode": {"enum": ["continuous", "discrete"]},
        "mapping": MAPPING_SCHEMA,
        "c1": CURVE_SCHEMA,
        "c2": CURVE_SCHEMA,
        "transform": {"type": "object", "required": ["offset", "scale"],
                      "properties": {"offset": _POINT,
                                     "scale": {"type": "number", "exclusiveMinimum": 0}}},
        "original_intervals": {"type": "object", "required": ["c1", "c2"],
                               "properties": {"c1": _INTERVAL, "c2": _INTERVAL}},
        "status": {"type": "string"},
        "converged": {"type": "boolean"},
        "iterations": {"type": "integer", "minimum": 0},
        "beta_max": _NUM,
        "beta_ave": _NUM,
        "discrete": {"type": "object", "required": ["t", "alphas"],
                     "properties": {"t": _NUMS, "alphas": _NUMS}},
        "config": {"type": "object"},
    },
}

SURFACE_SCHEMA = {
    "type": "object",
    "required": ["surface", "pieces", "knot_mode", "max_deviation"],
    "properties": {
        "surface": {
            "type": "object",
            "required": ["degree_s", "degree_t", "knots_s", "knots_t", "control_net"],
            "properties": {
                "degree_s": {"const": 1},
                "degree_t": {"type": "integer", "minimum": 1},
                "knots_s": _NUMS,
                "knots_t": _NUMS,
                "control_net": {"type": "array", "minItems": 2, "maxItems": 2,
                                "items": {"type": "array", "items": _POINT}},
                "source_breaks": _NUMS,
            },
        },
        "pieces": {"type": "integer", "minimum": 1},
        "knot_mode": {"enum": ["uniform", "span"]},
        "max_deviation": {"type": "number", "minimum": 0},
    },
}


def _field_path(error, root):
    parts = [root] if root else []
    for p in error.absolute_path:
        if isinstance(p, int):
            if parts:
                parts[-1] += f"[{p}]"
            else:
                parts.append(f"[{p}]")
        else:
            parts.append(str(p))
    return ".".join(parts) or "document"


def validate_input(doc, schema, root=""):
    """Schema check for user input; failures name the offending field."""
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise InputError(_field_path(exc, root), exc.message) from None
    return doc


def validate_output(doc, schema, name):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as exc:
        raise OutputValidationError(f"{name}: {_field_path(exc, '')}: {exc.message}") from None


def load_json(path, field):
    """Parse a JSON file; unreadable or invalid files are errors on ``field``."""
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(field, f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(field, f"{path} is not valid JSON ({exc.msg}, line {exc.lineno})") from None


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

#: Columns and required header keys of every CSV table.
CSV_TABLES = {
    "warp": (("t", "beta_deg"), ("beta_max", "beta_ave")),
    "mapping": (("t", "sigma"), ()),
    "report": (("iteration", "objective", "beta_ave", "seconds"), ()),
    "compare": (("mode", "samples", "sample_beta_max", "sample_beta_ave",
                 "dense_beta_max", "dense_beta_ave", "iterations", "status"), ()),
}


def _cell(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format_float(v)


def csv_text(table, rows, header=None):
    """CSV text for ``table``; ``header`` values become ``# key=value`` lines."""
    columns, keys = CSV_TABLES[table]
    header = header or {}
    buf = io.StringIO()
    for k in keys:
        buf.write(f"# {k}={_cell(header[k])}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def validate_csv(text, table, n_rows=None):
    """Check header lines, column names, row widths and numeric cells."""
    columns, keys = CSV_TABLES[table]
    lines = text.splitlines()
    seen = {}
    while lines and lines[0].startswith("#"):
        key, _, value = lines.pop(0)[1:].strip().partition("=")
        seen[key] = value
    for k in keys:
        if k not in seen:
            raise OutputValidationError(f"{table} CSV: missing header {k}")
        float(seen[k])
    rows = list(csv.reader(lines))
    if not rows or tuple(rows[0]) != columns:
        raise OutputValidationError(f"{table} CSV: expected columns {columns}")
    body = rows[1:]
    if n_rows is not None and len(body) != n_rows:
        raise OutputValidationError(f"{table} CSV: expected {n_rows} rows, got {len(body)}")
    for i, row in enumerate(body):
        if len(row) != len(columns):
            raise OutputValidationError(f"{table} CSV row {i}: {len(row)} cells")
        for name, cell in zip(columns, row):
            if name in ("mode", "status"):
                continue
            try:
                v = float(cell)
            except ValueError:
                raise OutputValidationError(
                    f"{table} CSV row {i}: {name}={cell!r} is not a number") from None
            # warp angles are NaN at degenerate rulings; nothing else may be
            if not math.isfinite(v) and "beta" not in name:
                raise OutputValidationError(f"{table} CSV row {i}: {name} not finite")


def warp_csv(profile):
    return csv_text("warp", zip(profile.t, profile.angles),
                    {"beta_max": profile.beta_max, "beta_ave": profile.beta_ave})


def mapping_csv(t, sigma_values):
    return csv_text("mapping", zip(t, sigma_values))


def report_csv(report):
    rows = zip(range(len(report.objective_trace)), report.objective_trace,
               report.beta_ave_trace, report.time_trace)
    return csv_text("report", rows)


# ---------------------------------------------------------------------------
# OBJ
# ---------------------------------------------------------------------------

def obj_text(mesh, name="strip"):
    """ASCII OBJ of a quad mesh (1-based face indices)."""
    out = [f"# {name} nu={mesh.nu} nv={mesh.nv}", f"o {name}"]
    out += ["v " + " ".join(format_float(c) for c in v) for v in mesh.vertices]
    out += ["f " + " ".join(str(int(i) + 1) for i in q) for q in mesh.quads]
    return "\n".join(out) + "\n"


def validate_obj(text, n_vertices, n_faces):
    nv = nf = 0
    for line in text.splitlines():
        if line.startswith("v "):
            vals = line.split()[1:]
            if len(vals) != 3 or not all(math.isfinite(float(x)) for x in vals):
                raise OutputValidationError(f"OBJ: bad vertex record {line!r}")
            nv += 1
        elif line.startswith("f "):
            idx = [int(x) for x in line.split()[1:]]
            if len(idx) < 3 or min(idx) < 1 or max(idx) > n_vertices:
                raise OutputValidationError(f"OBJ: bad face record {line!r}")
            nf += 1
    if (nv, nf) != (n_vertices, n_faces):
        raise OutputValidationError(
            f"OBJ: expected {n_vertices} vertices and {n_faces} faces, got {nv} and {nf}")


def write_files(directory, documents):
    """Write already-validated ``{filename: text}`` documents."""
    os.makedirs(directory, exist_ok=True)
    for name, text in documents.items():
        with open(os.path.join(directory, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
