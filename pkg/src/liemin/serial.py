"""JSON-friendly conversion of exact and float data."""
from __future__ import annotations

import json
import math
from fractions import Fraction

import numpy as np

from .poly import Polynomial, Template, render, render_template


def number(x):
    """Fractions become ``"p/q"`` strings, floats stay floats (shortest repr)."""
    if isinstance(x, bool):
        return x
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            return repr(x)
        return x
    raise TypeError(f"not a number: {x!r}")


def parse_number(s):
    if isinstance(s, str):
        return Fraction(s)
    return s


def to_jsonable(obj, names=None):
    """Recursively convert library values into JSON-compatible data."""
    if isinstance(obj, (Fraction, float, np.floating)) or (isinstance(obj, int) and not isinstance(obj, bool)):
        return number(obj)
    if isinstance(obj, Polynomial):
        return render(obj, names)
    if isinstance(obj, Template):
        return render_template(obj, names)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist(), names)
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v, names) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v, names) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
