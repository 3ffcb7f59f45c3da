"""Batch analysis: every check yields a verdict plus a replayable certificate."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from . import __version__, linalg
from .combinatorics import erasure_fixpoint, find_2link_ordering, two_link_obstruction
from .cycles import (
    build_pool_perturbation,
    constraint_matrix,
    extremality_kernel,
    find_free_pool,
    find_mesh_cycles,
)
from .io import InstanceFile, pretty
from .measure import call_price, check_convex_order, mean
from .rational import format_rational as fr
from .support import admits_martingale_kernel, intersection_screen, make_positive_coupling, validate_coupling
from .wep import NotOneErasedError, verify_saturation_theorem, wep_holds, wep_operator

CHECKS = (
    "convex-order",
    "validate",
    "intersection-screen",
    "2link",
    "erasability",
    "wep",
    "2nets-saturation",
    "extremality",
    "mesh-cycles",
    "free-pool",
)
NO_CERT = "no-certificate (oracle-only)"


class InvariantViolation(RuntimeError):
    """An internal cross-check failed: this is a bug, not a verdict."""


def _paths(ps) -> list:
    return [[fr(x), fr(y)] for x, y in ps]


def _vector(v: Dict) -> list:
    return [[fr(x), fr(y), fr(w)] for (x, y), w in sorted(v.items()) if w != 0]


def _build_tree(build) -> list:
    if build[0] == "mesh":
        m = build[1]
        return ["mesh", fr(m.x), [fr(y) for y in sorted(m.ys)]]
    return ["merge", _build_tree(build[1]), _build_tree(build[2])]


def verdict(result, certificate) -> dict:
    return {"result": result, "certificate": certificate}


def _skip(reason: str) -> dict:
    return verdict("skipped: " + reason, NO_CERT)


@dataclass
class AnalysisReport:
    verdicts: Dict[str, dict] = field(default_factory=dict)
    seed: int = 0
    checks: Sequence[str] = CHECKS

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "seed": self.seed,
            "checks": list(self.checks),
            "verdicts": {k: self.verdicts[k] for k in CHECKS if k in self.verdicts},
        }

    def to_json(self) -> str:
        return pretty(self.to_dict())

    def to_text(self) -> str:
        lines = [f"motsupport {__version__} seed={self.seed}"]
        for k in CHECKS:
            if k in self.verdicts:
                lines.append(f"{k:20s} {_short(self.verdicts[k]['result'])}")
        return "\n".join(lines) + "\n"


def _short(result) -> str:
    if isinstance(result, bool):
        return "yes" if result else "no"
    if isinstance(result, dict):
        return " ".join(f"{k}={_short(v)}" for k, v in result.items())
    return str(result)


# ------------------------------------------------------------------ checks


def _convex_order(inst: InstanceFile) -> dict:
    mu, nu = inst.mu, inst.nu
    if mu is None or nu is None:
        return _skip("marginals missing")
    res = check_convex_order(mu, nu)
    if res.witness == "mean-mismatch":
        return verdict(False, {"type": "mean-mismatch", "means": [fr(mean(mu)), fr(mean(nu))]})
    if not res:
        k = res.witness
        return verdict(False, {"type": "strike", "strike": fr(k), "calls": [fr(call_price(mu, k)), fr(call_price(nu, k))]})
    grid = sorted(set(mu.points) | set(nu.points))
    return verdict(True, {
        "type": "call-grid",
        "mean": fr(mean(mu)),
        "strikes": [[fr(k), fr(call_price(mu, k)), fr(call_price(nu, k))] for k in grid],
    })


def _validate(inst: InstanceFile) -> dict:
    Q = inst.coupling()
    if Q is None:
        return _skip("no weights")
    rep = validate_coupling(Q)
    viol = [[v.kind, fr(v.location), fr(v.lhs), fr(v.rhs)] for v in rep.violations]
    return verdict(rep.ok, {"type": "recompute", "violations": viol})


def _screen(S) -> dict:
    hits = intersection_screen(S)
    cert = {"type": "shared-triples", "pairs": [[fr(a), fr(b), [fr(y) for y in ys]] for a, b, ys in hits]}
    return verdict(bool(hits), cert)


def _two_link(S) -> dict:
    ordering = find_2link_ordering(S)
    if ordering is not None:
        return verdict(True, {"type": "ordering", "order": [fr(x) for x in ordering.order]})
    block = two_link_obstruction(S)
    if block is None:
        raise InvariantViolation("peeling stalled but no obstruction block found")
    return verdict(False, {"type": "obstruction", "block": [fr(x) for x in block]})


def _erasability(S) -> dict:
    trace = erasure_fixpoint(S)
    if trace.replay() != trace.fixpoint:
        raise InvariantViolation("erasure trace does not replay")
    return verdict(trace.fully_erasable, {
        "type": "trace",
        "steps": [[op, _paths(sorted(removed))] for op, removed in trace.steps],
        "fixpoint": _paths(trace.fixpoint.sorted_paths),
    })


def _independent_columns(rows, ncols) -> List[int]:
    _, pivots = linalg.rref(rows) if rows else ([], [])
    return list(pivots)


def _wep(S) -> dict:
    res = wep_holds(S)
    if res:
        T, _, cols = wep_operator(S)
        piv = _independent_columns(T, len(cols))
        if len(piv) != len(S):
            raise InvariantViolation("full rank but too few pivot columns")
        return verdict(True, {
            "type": "invertible-minor",
            "rank": res.rank,
            "columns": [[kind, fr(p)] for kind, p in (cols[j] for j in piv)],
        })
    return verdict(False, {"type": "cokernel", "rank": res.rank, "vector": _vector(res.cokernel_witness)})


def _saturation(S) -> dict:
    try:
        rep = verify_saturation_theorem(S)
    except NotOneErasedError:  # pragma: no cover - the core is 1-erased by construction
        raise InvariantViolation("saturation check on a non-1-erased core")
    if rep.violation:
        raise InvariantViolation("WEP holds but a 2-net is not saturated")
    missing = {n.paths: m for n, m in rep.non_saturated}
    nets = [
        {"build": _build_tree(n.build), "paths": _paths(n.paths.sorted_paths), "missing": _paths(missing.get(n.paths, ()))}
        for n in rep.nets
    ]
    result = {"wep": rep.wep, "all-saturated": rep.all_saturated, "search-incomplete": rep.search_incomplete}
    return verdict(result, {"type": "nets", "core": _paths(rep.analysed.sorted_paths), "nets": nets})


def _coupling_for(inst: InstanceFile, S):
    Q = inst.coupling()
    if Q is not None:
        return Q, "weights"
    if admits_martingale_kernel(S):
        return make_positive_coupling(S), "positive-synthetic"
    return None, None


def _extremality(inst: InstanceFile, S) -> dict:
    Q, origin = _coupling_for(inst, S)
    if Q is None:
        return _skip("support admits no martingale coupling")
    if not validate_coupling(Q).ok:
        return _skip("coupling is invalid")
    res = extremality_kernel(Q)
    if res:
        rows, paths, labels = constraint_matrix(Q.support)
        piv = _independent_columns(linalg.transpose(rows), len(rows))
        if len(piv) != len(paths):
            raise InvariantViolation("extremal but too few independent constraint rows")
        return verdict(True, {
            "type": "invertible-minor",
            "coupling": origin,
            "rows": [[kind, fr(p)] for kind, p in (labels[i] for i in piv)],
        })
    return verdict(False, {"type": "kernel", "coupling": origin, "vector": _vector(res.kernel_basis[0])})


def _mesh_cycles(S) -> dict:
    mcs = find_mesh_cycles(S)
    if not mcs:
        return verdict(0, NO_CERT)
    for mc in mcs:
        if not mc.is_valid_in(S):
            raise InvariantViolation("mesh cycle is not valid in S")
    cycles = [[[fr(m.x), [fr(y) for y in sorted(m.ys)]] for m in mc.meshes] for mc in mcs]
    return verdict(len(mcs), {"type": "mesh-cycles", "cycles": cycles})


def _free_pool(inst: InstanceFile, S) -> dict:
    pool = find_free_pool(S)
    if pool is None:
        return verdict(False, NO_CERT)
    cert = {"type": "pool", "cycles": [[fr(v) for v in c.nodes] for c in pool.cycles]}
    Q, origin = _coupling_for(inst, S)
    if Q is not None and validate_coupling(Q).ok:
        pair = build_pool_perturbation(Q, pool)
        cert.update({"coupling": origin, "alpha": [fr(a) for a in pair.alpha], "direction": _vector(pair.direction)})
    return verdict(True, cert)


def analyze(inst: InstanceFile, checks: Optional[Sequence[str]] = None, seed: int = 0) -> AnalysisReport:
    """Run the requested checks in the fixed order of :data:`CHECKS`."""
    wanted = [c for c in CHECKS if checks is None or c in checks]
    unknown = set(checks or ()) - set(CHECKS)
    if unknown:
        raise ValueError(f"unknown checks: {sorted(unknown)}")
    S = inst.effective_support()
    out: Dict[str, dict] = {}
    for name in wanted:
        if name == "convex-order":
            out[name] = _convex_order(inst)
        elif name == "validate":
            out[name] = _validate(inst)
        elif S is None:
            out[name] = _skip("no support")
        elif name == "intersection-screen":
            out[name] = _screen(S)
        elif name == "2link":
            out[name] = _two_link(S)
        elif name == "erasability":
            out[name] = _erasability(S)
        elif name == "wep":
            out[name] = _wep(S)
        elif name == "2nets-saturation":
            out[name] = _saturation(S)
        elif name == "extremality":
            out[name] = _extremality(inst, S)
        elif name == "mesh-cycles":
            out[name] = _mesh_cycles(S)
        elif name == "free-pool":
            out[name] = _free_pool(inst, S)
    _cross_check(out)
    return AnalysisReport(out, seed, wanted)


def _cross_check(v: Dict[str, dict]):
    """Implications that must hold between verdicts computed in one report."""
    def res(k):
        r = v.get(k, {}).get("result")
        return r if isinstance(r, bool) else None

    chain = [res("2link"), res("erasability"), res("wep"), res("extremality")]
    for a, b in zip(chain, chain[1:]):
        if a is True and b is False:
            raise InvariantViolation(f"implication chain broken: {chain}")
    if res("2link") is not None and res("erasability") is not None and res("2link") != res("erasability"):
        raise InvariantViolation("2-link and full erasability disagree")
    if res("wep") is not None and res("extremality") is not None and res("wep") != res("extremality"):
        raise InvariantViolation("WEP and extremality disagree")
    if res("intersection-screen") and res("wep"):
        raise InvariantViolation("shared triple but WEP holds")
    meshes = v.get("mesh-cycles", {}).get("result")
    if isinstance(meshes, int) and not isinstance(meshes, bool) and meshes > 0 and res("wep"):
        raise InvariantViolation("cycle of 2-meshes but WEP holds")
