"""Exact time and probability arithmetic.

Finite durations and probabilities are ``fractions.Fraction`` values so
that sums of path lifetimes hit the horizon exactly and distribution
normalization is an equality test, never a tolerance test.  The single
non-finite duration is ``INFINITY`` (``math.inf``), which compares
correctly against any Fraction; it marks passive states and never takes
part in path arithmetic.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Union

from .errors import ParseError, SemanticError

INFINITY = math.inf

#: A duration: exact non-negative rational, or INFINITY for passive states.
Duration = Union[Fraction, float]


def is_infinite(value: Duration) -> bool:
    return value == INFINITY


def parse_duration(raw: object, *, path: str = "") -> Duration:
    """Parse ``"p/q"``, a decimal string, an int, or ``"inf"`` exactly.

    JSON floats are rejected: a float literal has already lost the exact
    value the file author meant, so we insist on strings or ints.
    """
    value = _parse_exact(raw, path=path, allow_inf=True)
    if value != INFINITY and value < 0:
        raise SemanticError(f"duration must be >= 0, got {value}", path=path)
    return value


def parse_probability(raw: object, *, path: str = "") -> Fraction:
    value = _parse_exact(raw, path=path, allow_inf=False)
    if not 0 <= value <= 1:
        raise SemanticError(f"probability must be in [0, 1], got {value}", path=path)
    return value


def parse_real(raw: object, *, path: str = "") -> Fraction:
    """Parse a real-valued attribute exactly; floats are accepted here.

    Criticality rates, balances and capacities are plain reals, so a JSON
    number is fine; it is converted to the exact binary rational it is.
    """
    if isinstance(raw, bool):
        raise ParseError(f"expected a number, got {raw!r}", path=path)
    if isinstance(raw, float):
        return Fraction(raw)
    return _parse_exact(raw, path=path, allow_inf=False)


def _parse_exact(raw: object, *, path: str, allow_inf: bool) -> Duration:
    if isinstance(raw, bool):
        raise ParseError(f"expected a number, got {raw!r}", path=path)
    if isinstance(raw, int):
        return Fraction(raw)
    if isinstance(raw, str):
        text = raw.strip()
        if text.lower() in ("inf", "infinity"):
            if allow_inf:
                return INFINITY
            raise SemanticError("infinity is not allowed here", path=path)
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"not a rational number: {raw!r} ({exc})", path=path) from None
    if isinstance(raw, float):
        raise ParseError(
            f"float literal {raw!r} is ambiguous; write it as a string (\"p/q\" or decimal)",
            path=path,
        )
    raise ParseError(f"expected a rational number, got {type(raw).__name__}", path=path)


def format_duration(value: Duration) -> str:
    if is_infinite(value):
        return "inf"
    return str(value)


def format_fraction(value: Fraction) -> str:
    return str(value)
