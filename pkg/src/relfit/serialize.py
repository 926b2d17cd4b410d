"""Deterministic JSON and CSV emission for CLI outputs.

Dictionaries keep their insertion order, floats are printed with 17
significant digits (enough to round-trip IEEE doubles bit-exactly), and
indentation is fixed, so identical results serialize to identical bytes.
"""

from __future__ import annotations

import json
import math

from .errors import InvalidArgument


def format_float(x: float) -> str:
    if not math.isfinite(x):
        raise InvalidArgument(f"cannot serialize non-finite number {x!r}")
    text = format(float(x), ".17g")
    if "." not in text and "e" not in text and "E" not in text:
        text += ".0"
    return text


def _emit(obj, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        for i, (key, value) in enumerate(obj.items()):
            out.append(f"{inner}{json.dumps(str(key))}: ")
            _emit(value, indent + 1, out)
            out.append(",\n" if i < len(obj) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        seq = list(obj)
        if not seq:
            out.append("[]")
            return
        # short numeric rows stay on one line for readability
        if all(isinstance(x, (int, float, bool)) for x in seq) and len(seq) <= 16:
            parts = []
            for x in seq:
                scratch: list[str] = []
                _emit(x, 0, scratch)
                parts.append("".join(scratch))
            out.append("[" + ", ".join(parts) + "]")
            return
        out.append("[\n")
        for i, value in enumerate(seq):
            out.append(inner)
            _emit(value, indent + 1, out)
            out.append(",\n" if i < len(seq) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, float):
        out.append(format_float(obj))
    elif isinstance(obj, int):
        out.append(str(obj))
    elif obj is None:
        out.append("null")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise InvalidArgument(f"cannot serialize value of type {type(obj).__name__}")


def dumps(obj) -> str:
    """Serialize to deterministic, diff-friendly JSON text."""
    out: list[str] = []
    _emit(obj, 0, out)
    out.append("\n")
    return "".join(out)


def csv_row(values) -> str:
    """One CSV line; floats use the same 17-digit format as the JSON."""
    parts = []
    for value in values:
        if isinstance(value, bool):
            parts.append("true" if value else "false")
        elif isinstance(value, float):
            parts.append(format_float(value))
        else:
            parts.append(str(value))
    return ",".join(parts) + "\n"
