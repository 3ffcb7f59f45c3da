"""Exact rational parsing and formatting.

Every scalar in the library is a :class:`fractions.Fraction`. Inputs may be
``"p/q"`` strings, integer strings, decimal strings (converted by place value,
never through a binary float) or Python ints.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational as _RationalABC

Q = Fraction


class RationalParseError(ValueError):
    pass


def parse_rational(value) -> Fraction:
    if isinstance(value, bool):
        raise RationalParseError(f"not a rational: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, _RationalABC):
        return Fraction(value.numerator, value.denominator)
    if isinstance(value, float):
        # repr gives the shortest decimal that round-trips; treat it as the intended literal
        return parse_rational(repr(value))
    if isinstance(value, str):
        text = value.strip()
        if not text:
            raise RationalParseError("empty rational")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise RationalParseError(f"bad rational {value!r}: {exc}") from None
    raise RationalParseError(f"not a rational: {value!r}")


def format_rational(r: Fraction) -> str:
    r = Fraction(r)
    if r.denominator == 1:
        return str(r.numerator)
    return f"{r.numerator}/{r.denominator}"
