"""Finite discrete measures on (0, inf) and the convex-order test."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Tuple, Union

from .rational import parse_rational


class MeasureError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteMeasure:
    """Probability measure with finitely many atoms.

    ``atoms`` is a tuple of ``(point, mass)`` pairs with strictly increasing,
    strictly positive points and strictly positive masses summing to one.
    Use :meth:`from_pairs` to canonicalize unsorted input.
    """

    atoms: Tuple[Tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        atoms = tuple((Fraction(p), Fraction(m)) for p, m in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise MeasureError("measure has no atoms")
        prev = None
        for p, m in atoms:
            if p <= 0:
                raise MeasureError(f"atom at non-positive point {p}")
            if m <= 0:
                raise MeasureError(f"non-positive mass {m} at {p}")
            if prev is not None and p <= prev:
                raise MeasureError("points must be strictly increasing")
            prev = p
        total = sum(m for _, m in atoms)
        if total != 1:
            raise MeasureError(f"total mass is {total}, not 1")

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "DiscreteMeasure":
        """Sort, merge duplicate points and build; zero masses are rejected."""
        merged: dict = {}
        for point, mass in pairs:
            p = parse_rational(point)
            m = parse_rational(mass)
            if m == 0:
                raise MeasureError(f"zero mass at {p}")
            merged[p] = merged.get(p, Fraction(0)) + m
        return cls(tuple(sorted(merged.items())))

    @classmethod
    def dirac(cls, point) -> "DiscreteMeasure":
        return cls(((parse_rational(point), Fraction(1)),))

    @property
    def points(self) -> Tuple[Fraction, ...]:
        return tuple(p for p, _ in self.atoms)

    @property
    def masses(self) -> Tuple[Fraction, ...]:
        return tuple(m for _, m in self.atoms)

    def mass_at(self, point) -> Fraction:
        point = Fraction(point)
        for p, m in self.atoms:
            if p == point:
                return m
        return Fraction(0)

    def __len__(self):
        return len(self.atoms)


def mean(m: DiscreteMeasure) -> Fraction:
    return sum((p * w for p, w in m.atoms), Fraction(0))


def call_price(m: DiscreteMeasure, strike) -> Fraction:
    k = Fraction(strike)
    return sum((max(p - k, 0) * w for p, w in m.atoms), Fraction(0))


@dataclass(frozen=True)
class ConvexOrderResult:
    holds: bool
    witness: Optional[Union[Fraction, str]] = None

    def __bool__(self):
        return self.holds


def check_convex_order(mu: DiscreteMeasure, nu: DiscreteMeasure) -> ConvexOrderResult:
    """Decide ``mu <= nu`` in convex order.

    Equal means plus call-price domination at every atom of either measure;
    call functions are piecewise linear with kinks only at atoms, so the
    finite strike grid is exhaustive. A failing strike (or the token
    ``"mean-mismatch"``) is returned as witness.
    """
    if mean(mu) != mean(nu):
        return ConvexOrderResult(False, "mean-mismatch")
    for k in sorted(set(mu.points) | set(nu.points)):
        if call_price(mu, k) > call_price(nu, k):
            return ConvexOrderResult(False, k)
    return ConvexOrderResult(True)
