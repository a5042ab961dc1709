"""Numeric-mode helpers.

Values flow through the package as plain Python numbers: ``int`` and
``fractions.Fraction`` on the exact path, ``float`` on the fast path.
Instances built from rational data stay exact end to end, so budget-balance
equalities can be asserted with zero tolerance; continuous distributions
produce floats and equality checks fall back to ``FLOAT_TOL``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Union

Num = Union[int, float, Fraction]

# Tolerance for equality/ordering checks on the float path.  Exact-path
# checks never use it.
FLOAT_TOL = 1e-9

# Largest integer magnitude that the float fast path will accept.  Within
# this range float64 addition of integers is exact.
_INT_FLOAT_SAFE = 2**40


def is_exact(x: Num) -> bool:
    """True when ``x`` participates in exact arithmetic (int or Fraction)."""
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def all_exact(values: Iterable[Num]) -> bool:
    return all(is_exact(v) for v in values)


def needs_exact_path(values: Iterable[Num]) -> bool:
    """True when enumeration must avoid float conversion to stay exact."""
    for v in values:
        if isinstance(v, Fraction):
            return True
        if isinstance(v, int) and abs(v) > _INT_FLOAT_SAFE:
            return True
    return False


def parse_value(text: object, mode: str) -> Num:
    """Parse a serialized value. Exact mode accepts "3", "0.25" and "1/3"."""
    if mode == "exact":
        if isinstance(text, bool):
            raise ValueError("booleans are not values")
        if isinstance(text, int):
            return text
        if isinstance(text, float):
            raise ValueError(f"exact mode requires string/int values, got float {text!r}")
        frac = Fraction(str(text))
        return int(frac) if frac.denominator == 1 else frac
    if mode == "float":
        return float(text)  # type: ignore[arg-type]
    raise ValueError(f"unknown numeric mode {mode!r}")


def format_value(x: Num, mode: str) -> object:
    """Serialize a value: rational string on the exact path, IEEE double otherwise."""
    if mode == "exact":
        if isinstance(x, float):
            raise ValueError(f"float value {x!r} on the exact path")
        return str(x)
    return float(x)


def close_enough(a: Num, b: Num, exact: bool) -> bool:
    """Equality with the mode-appropriate tolerance."""
    if exact:
        return a == b
    return abs(a - b) <= FLOAT_TOL
