"""Deterministic JSON emission with fixed-precision floats.

Floats are printed with 17 significant digits and '.' decimal separator so
repeated runs produce byte-identical artifacts regardless of locale.
"""
from __future__ import annotations

import json

import numpy as np


def _format(obj, indent: int, level: int) -> str:
    pad = " " * (indent * level)
    inner = " " * (indent * (level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{inner}{json.dumps(str(key))}: {_format(value, indent, level + 1)}'
            for key, value in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{_format(value, indent, level + 1)}" for value in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not np.isfinite(value):
            return json.dumps(value)  # Infinity / -Infinity / NaN, as json.dumps
        return f"{value:.17g}"
    if isinstance(obj, complex):
        return _format([obj.real, obj.imag], indent, level)
    return json.dumps(obj)


def dump_json(obj, indent: int = 2) -> str:
    return _format(obj, indent, 0) + "\n"
