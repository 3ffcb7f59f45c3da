"""Exact dense linear algebra over the rationals.

Matrices are lists of rows of :class:`~fractions.Fraction`. Rank is decided
exactly: a modular rank equal to the maximum possible value proves full rank
over Q (rank over GF(p) never exceeds rank over Q); anything else falls
back to fraction-free integer elimination.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import List, Optional, Sequence, Tuple

from ._kernels import PRIME, rank_mod_p

Matrix = List[List[Fraction]]
Vector = List[Fraction]


def zeros(m: int, n: int) -> Matrix:
    return [[Fraction(0)] * n for _ in range(m)]


def transpose(a: Sequence[Sequence[Fraction]]) -> Matrix:
    return [list(col) for col in zip(*a)] if a else []


def matvec(a: Sequence[Sequence[Fraction]], v: Sequence[Fraction]) -> Vector:
    return [sum((aij * vj for aij, vj in zip(row, v)), Fraction(0)) for row in a]


def vecmat(v: Sequence[Fraction], a: Sequence[Sequence[Fraction]]) -> Vector:
    if not a:
        return []
    n = len(a[0])
    out = [Fraction(0)] * n
    for vi, row in zip(v, a):
        if vi:
            for j, aij in enumerate(row):
                if aij:
                    out[j] += vi * aij
    return out


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def _integer_rows(a: Sequence[Sequence[Fraction]]) -> List[List[int]]:
    out = []
    for row in a:
        den = lcm(*(v.denominator for v in row)) if row else 1
        out.append([v.numerator * (den // v.denominator) for v in row])
    return out


def _modular_image(int_rows: List[List[int]]):
    return [[v % PRIME for v in row] for row in int_rows]


def _bareiss_rank(rows: List[List[int]]) -> int:
    a = [list(r) for r in rows]
    m = len(a)
    n = len(a[0]) if m else 0
    r = 0
    prev = 1
    for c in range(n):
        if r == m:
            break
        piv = next((i for i in range(r, m) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        for i in range(r + 1, m):
            aic = a[i][c]
            row_i, row_r = a[i], a[r]
            for j in range(c + 1, n):
                row_i[j] = (row_i[j] * p - aic * row_r[j]) // prev
            row_i[c] = 0
        prev = p
        r += 1
    return r


def rank(a: Sequence[Sequence[Fraction]]) -> int:
    """Exact rank of a rational matrix."""
    m = len(a)
    if m == 0 or not a[0]:
        return 0
    n = len(a[0])
    rows = _integer_rows(a)
    if max(m, n) <= 512:
        if rank_mod_p(_modular_image(rows)) == min(m, n):
            return min(m, n)
    return _bareiss_rank(rows)


def rref(a: Sequence[Sequence[Fraction]]) -> Tuple[Matrix, List[int]]:
    """Reduced row echelon form and pivot columns."""
    r = [[Fraction(v) for v in row] for row in a]
    m = len(r)
    n = len(r[0]) if m else 0
    pivots: List[int] = []
    row = 0
    for c in range(n):
        if row == m:
            break
        piv = next((i for i in range(row, m) if r[i][c] != 0), None)
        if piv is None:
            continue
        r[row], r[piv] = r[piv], r[row]
        inv = 1 / r[row][c]
        r[row] = [v * inv for v in r[row]]
        prow = r[row]
        for i in range(m):
            if i != row and r[i][c] != 0:
                f = r[i][c]
                r[i] = [vi - f * vp for vi, vp in zip(r[i], prow)]
        pivots.append(c)
        row += 1
    return r, pivots


def nullspace(a: Sequence[Sequence[Fraction]], ncols: Optional[int] = None) -> List[Vector]:
    """Basis of ``{v : a v = 0}``; one vector per free column, that entry set to 1."""
    if not a:
        n = ncols or 0
        return [[Fraction(int(i == j)) for i in range(n)] for j in range(n)]
    n = len(a[0])
    r, pivots = rref(a)
    free = [c for c in range(n) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -r[i][f]
        basis.append(v)
    return basis


def left_nullspace(a: Sequence[Sequence[Fraction]]) -> List[Vector]:
    """Basis of ``{y : y^T a = 0}``."""
    if not a:
        return []
    return nullspace(transpose(a))


def solve(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> Tuple[Optional[Vector], Optional[Vector]]:
    """Solve ``a x = b`` exactly.

    Returns ``(x, None)`` with free variables set to zero, or ``(None, y)``
    where ``y`` satisfies ``y^T a = 0`` and ``y . b != 0`` (a Fredholm
    infeasibility certificate).
    """
    m = len(a)
    n = len(a[0]) if m else 0
    aug = [list(row) + [Fraction(bi)] for row, bi in zip(a, b)]
    r, pivots = rref(aug)
    if n in pivots:
        for y in left_nullspace(a):
            if dot(y, b) != 0:
                return None, y
        raise AssertionError("inconsistent system without a certificate")  # pragma: no cover
    x = [Fraction(0)] * n
    for i, pc in enumerate(pivots):
        x[pc] = r[i][n]
    return x, None
