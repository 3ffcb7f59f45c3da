"""Hot integer kernels: modular rank and bitmask support combinatorics.

Each kernel has a numba ``@njit`` version and a pure-numpy version with the
same contract. Set ``MOTSUPPORT_NUMBA=0`` to force the numpy path (numba is
also skipped when it cannot be imported).

Bitmask encoding: a support over ``nx`` sorted x-points and ``ny <= 62``
sorted y-points is an ``int64`` row vector; bit ``j`` of entry ``i`` is set
when ``(x_i, y_j)`` is a path. Batches are ``(n_instances, nx)`` arrays.
"""

from __future__ import annotations

import os

import numpy as np

PRIME = 2147483647  # 2**31 - 1; products of two residues fit in int64

try:
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False


def numba_enabled() -> bool:
    return _HAVE_NUMBA and os.environ.get("MOTSUPPORT_NUMBA", "1") != "0"


def _njit(fn):
    if not _HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)


# ---------------------------------------------------------------- modular rank


def _rank_mod_p_numpy(a: np.ndarray, p: int = PRIME) -> int:
    a = np.array(a, dtype=np.int64) % p
    m, n = a.shape
    r = 0
    for c in range(n):
        if r == m:
            break
        nz = np.nonzero(a[r:, c])[0]
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        inv = pow(int(a[r, c]), p - 2, p)
        a[r] = (a[r] * inv) % p
        below = a[r + 1 :, c].copy()
        if below.any():
            a[r + 1 :] = (a[r + 1 :] - (below[:, None] * a[r]) % p) % p
        r += 1
    return r


@_njit
def _powmod(base, exp, p):
    result = 1
    base %= p
    while exp > 0:
        if exp & 1:
            result = (result * base) % p
        base = (base * base) % p
        exp >>= 1
    return result


@_njit
def _rank_mod_p_numba(a, p):
    a = a.copy()
    m, n = a.shape
    for i in range(m):
        for j in range(n):
            a[i, j] %= p
            if a[i, j] < 0:
                a[i, j] += p
    r = 0
    for c in range(n):
        if r == m:
            break
        piv = -1
        for i in range(r, m):
            if a[i, c] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != r:
            for j in range(n):
                t = a[r, j]
                a[r, j] = a[piv, j]
                a[piv, j] = t
        inv = _powmod(a[r, c], p - 2, p)
        for j in range(n):
            a[r, j] = (a[r, j] * inv) % p
        for i in range(r + 1, m):
            f = a[i, c]
            if f != 0:
                for j in range(n):
                    a[i, j] = (a[i, j] - (f * a[r, j]) % p) % p
        r += 1
    return r


def rank_mod_p(a, p: int = PRIME) -> int:
    """Rank of an integer matrix over GF(p)."""
    a = np.asarray(a, dtype=np.int64)
    if a.ndim != 2 or a.size == 0:
        return 0
    if numba_enabled():
        return int(_rank_mod_p_numba(a, p))
    return _rank_mod_p_numpy(a, p)


# ---------------------------------------------------------- bitmask supports


def _erase_batch_numpy(rows: np.ndarray, ny: int) -> np.ndarray:
    """Iterate E = E2y o E1y o E1x on every instance until fixpoint."""
    rows = np.array(rows, dtype=np.int64)
    bits = np.int64(1) << np.arange(ny, dtype=np.int64)
    while True:
        before = rows.copy()
        # E1x: drop y-columns hit by exactly one x
        colcount = ((rows[:, :, None] & bits) != 0).sum(axis=1)
        lonely = ((colcount == 1) * bits).sum(axis=1)
        rows = rows & ~lonely[:, None]
        # E1y then E2y, each evaluated on its own input
        rows = np.where(np.bitwise_count(rows) == 1, 0, rows)
        rows = np.where(np.bitwise_count(rows) == 2, 0, rows)
        if np.array_equal(rows, before):
            return rows


@_njit
def _popcount(v):
    c = 0
    while v:
        v &= v - 1
        c += 1
    return c


@_njit
def _erase_batch_numba(rows, ny):
    out = rows.copy()
    b, nx = out.shape
    for k in range(b):
        changed = True
        while changed:
            changed = False
            lonely = 0
            for j in range(ny):
                bit = 1 << j
                cnt = 0
                for i in range(nx):
                    if out[k, i] & bit:
                        cnt += 1
                if cnt == 1:
                    lonely |= bit
            for i in range(nx):
                v = out[k, i] & ~lonely
                if v != out[k, i]:
                    out[k, i] = v
                    changed = True
            for i in range(nx):
                if _popcount(out[k, i]) == 1:
                    out[k, i] = 0
                    changed = True
            for i in range(nx):
                if _popcount(out[k, i]) == 2:
                    out[k, i] = 0
                    changed = True
    return out


def erase_batch(rows, ny: int) -> np.ndarray:
    """Erasure fixpoint of every instance in a ``(B, nx)`` batch."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    if numba_enabled():
        return _erase_batch_numba(rows, ny)
    return _erase_batch_numpy(rows, ny)


def _peel_batch_numpy(rows: np.ndarray) -> np.ndarray:
    """Reverse greedy 2-link peeling; returns orders, ``-1`` rows when stalled.

    Empty rows (x not in S_X) are skipped and do not appear in the order.
    """
    rows = np.array(rows, dtype=np.int64)
    b, nx = rows.shape
    alive = rows != 0
    removed = np.full((b, nx), -1, dtype=np.int64)
    nsteps = np.zeros(b, dtype=np.int64)
    stalled = np.zeros(b, dtype=bool)
    for _ in range(nx):
        ok = np.zeros((b, nx), dtype=bool)
        for i in range(nx):
            others = np.zeros(b, dtype=np.int64)
            for j in range(nx):
                if j != i:
                    others |= np.where(alive[:, j], rows[:, j], 0)
            ok[:, i] = alive[:, i] & (np.bitwise_count(rows[:, i] & others) <= 2)
        has_alive = alive.any(axis=1)
        can = ok.any(axis=1)
        stalled |= has_alive & ~can
        pick = np.argmax(ok, axis=1)
        act = has_alive & can & ~stalled
        idx = np.nonzero(act)[0]
        removed[idx, nsteps[idx]] = pick[idx]
        alive[idx, pick[idx]] = False
        nsteps[idx] += 1
    orders = np.full((b, nx), -1, dtype=np.int64)
    for k in range(b):
        if stalled[k]:
            continue
        n = nsteps[k]
        orders[k, :n] = removed[k, :n][::-1]
    stalled_out = np.where(stalled, 1, 0)
    return orders, stalled_out


@_njit
def _peel_batch_numba(rows):
    b, nx = rows.shape
    orders = np.full((b, nx), -1, dtype=np.int64)
    stalled = np.zeros(b, dtype=np.int64)
    removed = np.empty(nx, dtype=np.int64)
    for k in range(b):
        alive = np.zeros(nx, dtype=np.bool_)
        left = 0
        for i in range(nx):
            if rows[k, i] != 0:
                alive[i] = True
                left += 1
        n = 0
        while left > 0:
            pick = -1
            for i in range(nx):
                if not alive[i]:
                    continue
                others = 0
                for j in range(nx):
                    if j != i and alive[j]:
                        others |= rows[k, j]
                if _popcount(rows[k, i] & others) <= 2:
                    pick = i
                    break
            if pick < 0:
                stalled[k] = 1
                break
            alive[pick] = False
            removed[n] = pick
            n += 1
            left -= 1
        if stalled[k] == 0:
            for t in range(n):
                orders[k, t] = removed[n - 1 - t]
    return orders, stalled


def peel_batch(rows):
    """2-link orderings by reverse peeling for a ``(B, nx)`` batch.

    Returns ``(orders, stalled)``: ``orders[k]`` lists x-indices (``-1``
    padded) and ``stalled[k] == 1`` when no ordering exists.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    if numba_enabled():
        return _peel_batch_numba(rows)
    return _peel_batch_numpy(rows)


def screen_batch(rows) -> np.ndarray:
    """1 where some pair of x-rows shares three or more y-bits."""
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    shared = np.bitwise_count(rows[:, :, None] & rows[:, None, :])
    nx = rows.shape[1]
    off = ~np.eye(nx, dtype=bool)
    return ((shared >= 3) & off).any(axis=(1, 2)).astype(np.int64)
