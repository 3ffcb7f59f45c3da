"""Erasure transformations, erased-set predicates and 2-link orderings."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, Optional, Tuple

from .support import Path, Support

OPERATORS = ("E1x", "E1y", "E2y")


def erase_once(S: Support, which: str) -> Support:
    """Apply one erasure operator; the predicate is read off the input S."""
    if which == "E1x":
        drop = {(x, y) for x, y in S.paths if len(S.xsec(y)) == 1}
    elif which == "E1y":
        drop = {(x, y) for x, y in S.paths if len(S.ysec(x)) == 1}
    elif which == "E2y":
        drop = {(x, y) for x, y in S.paths if len(S.ysec(x)) == 2}
    else:
        raise ValueError(f"unknown erasure operator {which!r}")
    return Support(S.paths - drop) if drop else S


def erase(S: Support) -> Support:
    """The composite E = E2y o E1y o E1x."""
    for op in OPERATORS:
        S = erase_once(S, op)
    return S


@dataclass(frozen=True)
class ErasureTrace:
    start: Support
    steps: Tuple[Tuple[str, FrozenSet[Path]], ...]
    fixpoint: Support

    @property
    def fully_erasable(self) -> bool:
        return not self.fixpoint

    @property
    def rounds(self) -> int:
        return len(self.steps) // len(OPERATORS)

    def replay(self) -> Support:
        """Re-apply the recorded removals, checking each against its operator."""
        S = self.start
        for op, removed in self.steps:
            nxt = erase_once(S, op)
            if S.paths - nxt.paths != removed:
                raise AssertionError(f"trace step {op} does not replay")
            S = nxt
        return S


def erasure_fixpoint(S: Support) -> ErasureTrace:
    """Iterate E until nothing changes, recording every removal."""
    steps = []
    cur = S
    while True:
        before = cur
        for op in OPERATORS:
            nxt = erase_once(cur, op)
            steps.append((op, frozenset(cur.paths - nxt.paths)))
            cur = nxt
        if cur == before:
            # drop the final no-op round
            del steps[-len(OPERATORS):]
            return ErasureTrace(S, tuple(steps), cur)


def is_fully_erasable(S: Support) -> bool:
    return erasure_fixpoint(S).fully_erasable


def is_erased(S: Support) -> bool:
    return erase(S) == S


def is_k_erased(S: Support, k: int) -> bool:
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    return all(len(S.ysec(x)) >= k + 1 for x in S.x_points)


@dataclass(frozen=True)
class TwoLinkOrdering:
    order: Tuple[Fraction, ...]

    def check(self, S: Support) -> bool:
        """Re-verify the 2-link inequality by direct counting."""
        if sorted(self.order) != list(S.x_points):
            return False
        seen: set = set()
        for x in self.order:
            ys = set(S.ysec(x))
            if len(ys & seen) > 2:
                return False
            seen |= ys
        return True


def find_2link_ordering(S: Support) -> Optional[TwoLinkOrdering]:
    """Reverse greedy peeling.

    Repeatedly remove the smallest x whose section meets the union of the
    remaining sections in at most two points; reversing the removal order
    gives a 2-link numbering. Peeling stalls exactly when none exists,
    because removing points only shrinks the unions.
    """
    alive = list(S.x_points)
    removed = []
    while alive:
        for x in alive:
            others: set = set()
            for z in alive:
                if z != x:
                    others.update(S.ysec(z))
            if len(others.intersection(S.ysec(x))) <= 2:
                alive.remove(x)
                removed.append(x)
                break
        else:
            return None
    return TwoLinkOrdering(tuple(reversed(removed)))


def two_link_obstruction(S: Support) -> Optional[Tuple[Fraction, ...]]:
    """A set of x-points where peeling stalls, or ``None`` when S is 2-link.

    Every member of the returned set meets the union of the other members
    in at least three points, so whichever member comes last in a numbering
    breaks the 2-link inequality.
    """
    alive = list(S.x_points)
    while alive:
        for x in alive:
            others: set = set()
            for z in alive:
                if z != x:
                    others.update(S.ysec(z))
            if len(others.intersection(S.ysec(x))) <= 2:
                alive.remove(x)
                break
        else:
            return tuple(alive)
    return None


def check_obstruction(S: Support, block) -> bool:
    block = [Fraction(x) for x in block]
    if not block or not set(block) <= set(S.x_points):
        return False
    for x in block:
        others = set().union(*(S.ysec(z) for z in block if z != x))
        if len(others.intersection(S.ysec(x))) < 3:
            return False
    return True
