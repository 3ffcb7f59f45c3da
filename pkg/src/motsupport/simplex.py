"""Exact two-phase primal simplex with Bland's rule.

Solves ``min c.x  s.t.  A x = b, x >= 0`` over the rationals and returns a
basic optimal solution.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence


class InfeasibleError(ValueError):
    pass


class UnboundedError(ValueError):
    pass


@dataclass
class SimplexResult:
    x: List[Fraction]
    objective: Fraction
    basis: List[int]
    pivots: int


def _pivot(tab: List[List[Fraction]], cost: List[Fraction], r: int, c: int):
    prow = tab[r]
    inv = 1 / prow[c]
    prow = [v * inv for v in prow]
    tab[r] = prow
    for i, row in enumerate(tab):
        if i != r and row[c] != 0:
            f = row[c]
            tab[i] = [a - f * b for a, b in zip(row, prow)]
    if cost[c] != 0:
        f = cost[c]
        cost[:] = [a - f * b for a, b in zip(cost, prow)]


def _run(tab, cost, basis, allowed: int) -> int:
    """Bland's rule iterations on columns ``< allowed``; returns pivot count."""
    npiv = 0
    while True:
        enter = next((j for j in range(allowed) if cost[j] < 0), None)
        if enter is None:
            return npiv
        best = None
        for i, row in enumerate(tab):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise UnboundedError("objective unbounded below")
        r = best[1]
        _pivot(tab, cost, r, enter)
        basis[r] = enter
        npiv += 1


def simplex(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction], c: Sequence[Fraction]) -> SimplexResult:
    m = len(A)
    n = len(c)
    A = [[Fraction(v) for v in row] for row in A]
    b = [Fraction(v) for v in b]
    for i in range(m):
        if b[i] < 0:
            A[i] = [-v for v in A[i]]
            b[i] = -b[i]
    # phase I: artificial columns n .. n+m-1
    tab = [A[i] + [Fraction(int(i == k)) for k in range(m)] + [b[i]] for i in range(m)]
    basis = [n + i for i in range(m)]
    cost = [Fraction(0)] * (n + m + 1)
    for row in tab:
        for j in range(n):
            cost[j] -= row[j]
        cost[-1] -= row[-1]
    npiv = _run(tab, cost, basis, n)
    if -cost[-1] != 0:
        raise InfeasibleError("no feasible point")
    # drive zero-level artificials out of the basis; drop redundant rows
    i = 0
    while i < len(tab):
        if basis[i] >= n:
            col = next((j for j in range(n) if tab[i][j] != 0), None)
            if col is None:
                del tab[i]
                del basis[i]
                continue
            _pivot(tab, [Fraction(0)] * (n + m + 1), i, col)
            basis[i] = col
            npiv += 1
        i += 1
    tab = [row[:n] + [row[-1]] for row in tab]
    # phase II
    cost = [Fraction(v) for v in c] + [Fraction(0)]
    for i, j in enumerate(basis):
        if cost[j] != 0:
            f = cost[j]
            cost = [a - f * r for a, r in zip(cost, tab[i])]
    npiv += _run(tab, cost, basis, n)
    x = [Fraction(0)] * n
    for i, j in enumerate(basis):
        x[j] = tab[i][-1]
    obj = sum((ci * xi for ci, xi in zip(c, x)), Fraction(0))
    return SimplexResult(x, obj, list(basis), npiv)
