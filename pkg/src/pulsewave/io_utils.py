"""Deterministic text output: CSV and JSON with fixed float formatting.

Every float is printed with 17 significant digits and files use LF line
endings, so identical inputs produce byte-identical artifacts.
"""

import math


def fmt(value):
    """Format one scalar for text output (floats at 17 significant digits)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise ValueError(f"non-finite value in output: {value!r}")
        return format(value, ".17g")
    return str(value)


def write_csv(path, header, rows):
    """Write rows of scalars as comma-separated text with a header line."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) for v in row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def dumps_json(obj, indent=0):
    """Serialize dicts/lists/scalars with deterministic float formatting.

    Key order is preserved (callers build dicts in a fixed order).
    """
    pad = " " * indent
    inner = " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{inner}"{k}": {dumps_json(v, indent + 2)}' for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, bool)) for v in seq):
            return "[" + ", ".join(fmt(v) for v in seq) + "]"
        items = [f"{inner}{dumps_json(v, indent + 2)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        escaped = obj.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
        return f'"{escaped}"'
    return fmt(obj)


def write_json(path, obj):
    with open(path, "w", newline="\n") as fh:
        fh.write(dumps_json(obj) + "\n")
