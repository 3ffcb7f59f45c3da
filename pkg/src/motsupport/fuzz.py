"""Exhaustive and sampled cross-checking of the support predicates.

Supports are drawn over small rational grids. The bitmask batch kernels
screen whole grids at once; each admissible support is then re-checked by
the object-level oracles and the implications between them are asserted.
Non-extremal supports for which neither a cycle of 2-meshes nor a free
pool is found are logged as instance files (one JSON object per line).
"""

from __future__ import annotations

import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .combinatorics import erasure_fixpoint, find_2link_ordering
from .cycles import (
    DegeneratePoolError,
    build_pool_perturbation,
    extremality_kernel,
    find_free_pool,
    find_mesh_cycles,
    preserves_constraints,
)
from .fixtures import free_cycle, shared_triple
from .io import InstanceFile
from .support import Support, intersection_screen, make_positive_coupling
from .wep import verify_saturation_theorem, wep_holds

EXHAUSTIVE_LIMIT = (4, 6)
DEFAULT_SAMPLE_BUDGET = 1000


@dataclass(frozen=True)
class Grid:
    name: str
    xs: Tuple[Fraction, ...]
    ys: Tuple[Fraction, ...]


def default_grids(max_x: int, max_y: int) -> List[Grid]:
    """An off-lattice grid (no x equals a y) and an on-lattice one."""
    ys = tuple(Fraction(k) for k in range(1, max_y + 1))
    step = Fraction(max_y - 1, max_x + 1)
    off = Grid("interior", tuple(1 + k * step for k in range(1, max_x + 1)), ys)
    grids = [off]
    lattice = tuple(Fraction(k) for k in range(2, max_y))[:max_x]
    if lattice and set(lattice) != set(off.xs):
        grids.append(Grid("lattice", lattice, ys))
    return grids


def section_options(x: Fraction, ys: Sequence[Fraction]) -> List[int]:
    """Bitmasks of every section a martingale kernel at ``x`` can have (plus empty)."""
    out = [0]
    for r in range(1, len(ys) + 1):
        for combo in combinations(range(len(ys)), r):
            pts = [ys[j] for j in combo]
            if pts == [x] or min(pts) < x < max(pts):
                out.append(sum(1 << j for j in combo))
    return out


def enumerate_rows(grid: Grid) -> np.ndarray:
    opts = [section_options(x, grid.ys) for x in grid.xs]
    rows = [r for r in product(*opts) if any(r)]
    return np.array(rows, dtype=np.int64).reshape(-1, len(grid.xs))


def sample_rows(grid: Grid, n: int, rng: random.Random) -> np.ndarray:
    opts = [section_options(x, grid.ys) for x in grid.xs]
    rows = []
    while len(rows) < n:
        r = tuple(rng.choice(o) for o in opts)
        if any(r):
            rows.append(r)
    return np.array(rows, dtype=np.int64).reshape(-1, len(grid.xs))


def rows_to_support(row, grid: Grid) -> Support:
    return Support(frozenset(
        (x, grid.ys[j]) for x, mask in zip(grid.xs, row) for j in range(len(grid.ys)) if (int(mask) >> j) & 1
    ))


@dataclass
class Outcome:
    """Verdicts for one support; ``violations`` lists broken implications."""

    paths: int
    ny: int
    one_erased: bool
    two_link: bool
    erasable: bool
    wep: bool
    extremal: bool
    screen: bool
    mesh_cycles: int
    pool: Optional[bool]
    saturation_incomplete: bool
    violations: List[str] = field(default_factory=list)


def check_support(S: Support, kernel_flags: Optional[Dict[str, bool]] = None, mu_masses=None) -> Outcome:
    """Run every oracle on S and assert the implications between them."""
    bad: List[str] = []
    two_link = find_2link_ordering(S) is not None
    trace = erasure_fixpoint(S)
    erasable = trace.fully_erasable
    wep = wep_holds(S).holds
    Q = make_positive_coupling(S, mu_masses)
    extremal = extremality_kernel(Q).extremal
    screen = bool(intersection_screen(S))
    sat = verify_saturation_theorem(S)
    mcs = find_mesh_cycles(S)
    ny = len(S.y_points)

    if kernel_flags is not None:
        for name, got in (("2link", two_link), ("erasable", erasable), ("screen", screen)):
            if kernel_flags[name] != got:
                bad.append(f"kernel/oracle disagreement on {name}")
    if two_link and not erasable:
        bad.append("2link without full erasability")
    if erasable and not two_link:
        bad.append("full erasability without 2link")
    if erasable and not wep:
        bad.append("fully erasable but not WEP")
    if wep != extremal:
        bad.append("WEP and extremality disagree")
    if ny <= 5 and wep != erasable:
        bad.append("WEP and full erasability disagree with at most five y-points")
    if screen and wep:
        bad.append("shared triple but WEP")
    if sat.violation:
        bad.append("WEP with a non-saturated 2-net")
    if mcs and (wep or extremal):
        bad.append("cycle of 2-meshes on a WEP support")
    for mc in mcs:
        if not mc.is_valid_in(S) or not preserves_constraints(S, mc.perturbation()):
            bad.append("invalid cycle of 2-meshes")

    pool: Optional[bool] = None
    if not extremal and not mcs:
        found = find_free_pool(S)
        pool = found is not None
        if found is not None:
            try:
                pair = build_pool_perturbation(Q, found)
            except (ValueError, DegeneratePoolError) as exc:
                bad.append(f"pool perturbation failed: {exc}")
            else:
                if not pair.check(Q):
                    bad.append("pool perturbation does not re-validate")
    return Outcome(
        len(S), ny, all(len(S.ysec(x)) >= 2 for x in S.x_points), two_link, erasable, wep, extremal,
        screen, len(mcs), pool, sat.search_incomplete, bad,
    )


def _kernel_flags(rows: np.ndarray, ny: int) -> List[Dict[str, bool]]:
    fix = _kernels.erase_batch(rows, ny)
    _, stalled = _kernels.peel_batch(rows)
    scr = _kernels.screen_batch(rows)
    return [
        {"erasable": not fix[k].any(), "2link": not stalled[k], "screen": bool(scr[k])}
        for k in range(rows.shape[0])
    ]


def _run_chunk(args):
    grid, rows, masses_seed = args
    flags = _kernel_flags(rows, len(grid.ys))
    out = []
    rng = random.Random(masses_seed) if masses_seed is not None else None
    for row, fl in zip(rows, flags):
        S = rows_to_support(row, grid)
        masses = None
        if rng is not None:
            raw = {x: rng.randint(1, 9) for x in S.x_points}
            tot = sum(raw.values())
            masses = {x: Fraction(v, tot) for x, v in raw.items()}
        out.append((S, check_support(S, fl, masses)))
    return out


@dataclass
class FuzzSummary:
    mode: str = "exhaustive"
    grids: List[str] = field(default_factory=list)
    examined: int = 0
    counts: Dict[str, int] = field(default_factory=dict)
    violations: List[dict] = field(default_factory=list)
    fixtures: Dict[str, dict] = field(default_factory=dict)
    logged: int = 0

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "grids": self.grids,
            "examined": self.examined,
            "counts": dict(sorted(self.counts.items())),
            "fixtures": self.fixtures,
            "violations": self.violations,
            "logged": self.logged,
        }


COUNTED = ("one_erased", "two_link", "erasable", "wep", "extremal", "screen", "saturation_incomplete")


def _tally(summary: FuzzSummary, oc: Outcome):
    summary.examined += 1
    for k in COUNTED:
        summary.counts[k] = summary.counts.get(k, 0) + int(getattr(oc, k))
    summary.counts["mesh_cycles"] = summary.counts.get("mesh_cycles", 0) + int(oc.mesh_cycles > 0)
    summary.counts["pool_found"] = summary.counts.get("pool_found", 0) + int(oc.pool is True)
    summary.counts["no_pool"] = summary.counts.get("no_pool", 0) + int(oc.pool is False)


def conjecture_record(S: Support, grid: str, oc: Outcome) -> dict:
    inst = InstanceFile.from_coupling(make_positive_coupling(S), meta={
        "grid": grid,
        "reason": "non-extremal-without-found-pool",
        "wep": oc.wep,
        "erasable": oc.erasable,
    })
    return inst.to_dict()


def run_fuzz(
    max_x: int = 3,
    max_y: int = 4,
    budget: Optional[int] = None,
    seed: int = 0,
    threads: int = 1,
    grids: Optional[Sequence[Grid]] = None,
    log_path=None,
    include_fixtures: bool = True,
) -> Tuple[FuzzSummary, List[Tuple[Support, Outcome]]]:
    """Enumerate (or sample, beyond the exhaustive limit) and cross-check.

    ``budget`` caps the number of supports examined, fixtures included;
    ``budget=0`` examines nothing.
    """
    exhaustive = max_x <= EXHAUSTIVE_LIMIT[0] and max_y <= EXHAUSTIVE_LIMIT[1]
    summary = FuzzSummary("exhaustive" if exhaustive else "sampled")
    results: List[Tuple[Support, Outcome]] = []
    if budget == 0:
        _write_log(log_path, [])
        return summary, results
    remaining = budget if budget is not None else (None if exhaustive else DEFAULT_SAMPLE_BUDGET)
    grids = list(grids) if grids is not None else default_grids(max_x, max_y)
    summary.grids = [g.name for g in grids]
    log: List[dict] = []

    def take(n):
        return n if remaining is None else min(n, remaining)

    if include_fixtures:
        for name, make in (("shared-triple", shared_triple), ("free-cycle", free_cycle)):
            if remaining is not None and remaining <= 0:
                break
            S = make()
            oc = check_support(S)
            summary.fixtures[name] = {"extremal": oc.extremal, "wep": oc.wep, "mesh_cycles": oc.mesh_cycles, "pool": oc.pool}
            _record(summary, results, log, name, S, oc)
            if remaining is not None:
                remaining -= 1

    rng = random.Random(seed)
    for grid in grids:
        if remaining is not None and remaining <= 0:
            break
        if exhaustive:
            rows = enumerate_rows(grid)
            rows = rows[: take(len(rows))]
            masses_seed = None
        else:
            rows = sample_rows(grid, take(remaining // max(1, len(grids)) or remaining), rng)
            masses_seed = rng.randrange(2**31)
        if remaining is not None:
            remaining -= len(rows)
        chunks = _chunks(grid, rows, threads, masses_seed)
        if threads > 1 and len(chunks) > 1:
            with ProcessPoolExecutor(max_workers=threads) as ex:
                parts = list(ex.map(_run_chunk, chunks))
        else:
            parts = [_run_chunk(c) for c in chunks]
        for part in parts:
            for S, oc in part:
                _record(summary, results, log, grid.name, S, oc)
    _write_log(log_path, log)
    summary.logged = len(log)
    return summary, results


def _chunks(grid, rows, threads, masses_seed):
    n = max(1, threads * 4) if threads > 1 else 1
    parts = np.array_split(rows, n) if len(rows) else [rows]
    return [(grid, p, None if masses_seed is None else masses_seed + i) for i, p in enumerate(parts) if len(p)]


def _record(summary, results, log, grid_name, S, oc):
    _tally(summary, oc)
    results.append((S, oc))
    for v in oc.violations:
        summary.violations.append({"grid": grid_name, "support": [[str(x), str(y)] for x, y in S.sorted_paths], "violation": v})
    if oc.pool is False:
        log.append(conjecture_record(S, grid_name, oc))


def _write_log(path, records: Iterable[dict]):
    if path is None:
        return
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
