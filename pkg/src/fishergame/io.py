"""JSON input parsing and canonical output.

Input documents look like::

    {"utilities": [[10, 3], [3, 10]], "money": [10, 10], "profile": [[1, 19], [1, 19]]}

Numbers may be JSON numbers or ``"p/q"`` strings.  Integers and rational
strings are kept exact; JSON decimals become floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import numpy as np

from .errors import FisherGameError
from .market import Market, StrategyProfile, normalize_market


class SchemaError(FisherGameError, ValueError):
    pass


def parse_number(v, where="value"):
    if isinstance(v, bool):
        raise SchemaError(f"{where}: booleans are not numbers")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        if not math.isfinite(v):
            raise SchemaError(f"{where}: {v} is not finite")
        return v
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise SchemaError(f"{where}: cannot parse {v!r}") from exc
    raise SchemaError(f"{where}: expected a number, got {type(v).__name__}")


def _matrix(doc, key):
    rows = doc.get(key)
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) and r for r in rows):
        raise SchemaError(f"'{key}' must be a non-empty list of non-empty lists")
    return [[parse_number(v, f"{key}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)]


@dataclass
class Problem:
    market: Market
    profile: StrategyProfile | None
    extra: dict


def load_problem(doc) -> Problem:
    """Validate a parsed JSON document and build the market (and profile)."""
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object")
    utilities = _matrix(doc, "utilities")
    money = doc.get("money")
    if not isinstance(money, list) or not money:
        raise SchemaError("'money' must be a non-empty list")
    money = [parse_number(v, f"money[{i}]") for i, v in enumerate(money)]
    market = normalize_market(utilities, money)
    profile = None
    if "profile" in doc:
        rows = _matrix(doc, "profile")
        if len(rows) != market.num_buyers or any(len(r) != market.num_goods for r in rows):
            raise SchemaError("'profile' must have the same shape as 'utilities'")
        profile = StrategyProfile(rows)
    extra = {k: v for k, v in doc.items() if k not in ("utilities", "money", "profile")}
    return Problem(market, profile, extra)


def read_problem(path) -> Problem:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from exc
    return load_problem(doc)


def fixture_names():
    return sorted(p.name[:-5] for p in resources.files("fishergame.data").iterdir()
                  if p.name.endswith(".json"))


def load_fixture(name) -> Problem:
    text = resources.files("fishergame.data").joinpath(f"{name}.json").read_text(encoding="utf-8")
    return load_problem(json.loads(text))


def canonical(obj):
    """Convert to plain JSON values: rationals as ``"p/q"``, floats to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj.numerator) if obj.denominator == 1 else f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return str(v)
        v = float(f"{v:.12g}")
        return 0.0 if v == 0 else v
    return obj


def dumps(obj):
    return json.dumps(canonical(obj), sort_keys=True, indent=2) + "\n"
