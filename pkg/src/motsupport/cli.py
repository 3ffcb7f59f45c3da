"""Command-line interface.

Exit codes: 0 when verdicts were computed (whatever they are), 1 when
``verify`` rejects a certificate, 2 on unreadable or invalid input, 3 on an
internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

from . import __version__
from .analysis import CHECKS, InvariantViolation, analyze
from .certify import verify_decomposition, verify_perturbation, verify_report
from .cycles import (
    DegeneratePoolError,
    build_pool_perturbation,
    extremality_kernel,
    find_free_pool,
    find_mesh_cycles,
    perturb_along,
)
from .generators import (
    GeneratorError,
    HKParams,
    gen_binomial,
    gen_hk_trinomial,
    gen_random_instance,
    get_cost,
    solve_mot_lp,
)
from .io import InstanceFile, InstanceParseError, dump_rows, loads_exact, pretty, read_instance, read_payoff
from .measure import DiscreteMeasure, MeasureError
from .rational import RationalParseError, format_rational as fr, parse_rational
from .support import CouplingError, SupportError, make_positive_coupling, validate_coupling
from .wep import InfeasibilityCertificate, wep_decompose

EXIT_OK, EXIT_REJECTED, EXIT_INPUT, EXIT_INTERNAL = 0, 1, 2, 3
INPUT_ERRORS = (InstanceParseError, RationalParseError, MeasureError, CouplingError, SupportError, GeneratorError)


class UsageError(ValueError):
    pass


def _emit(text: str, out: Optional[str] = None):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _json(doc) -> str:
    return pretty(doc) + "\n"


# ------------------------------------------------------------------ analyze


def cmd_analyze(args) -> int:
    checks = None
    if args.checks:
        checks = [c.strip() for c in args.checks.split(",") if c.strip()]
        unknown = set(checks) - set(CHECKS)
        if unknown:
            raise UsageError(f"unknown checks {sorted(unknown)}; choose from {', '.join(CHECKS)}")
    insts = [read_instance(p) for p in args.paths]

    def run(inst):
        return analyze(inst, checks, args.seed)

    if args.threads > 1 and len(insts) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as ex:
            reports = list(ex.map(run, insts))
    else:
        reports = [run(i) for i in insts]
    if args.text:
        text = "".join((f"== {p}\n" if len(reports) > 1 else "") + r.to_text() for p, r in zip(args.paths, reports))
    elif len(reports) == 1:
        text = reports[0].to_json() + "\n"
    else:
        text = _json({"reports": [{"path": p, "report": r.to_dict()} for p, r in zip(args.paths, reports)]})
    _emit(text, args.out)
    return EXIT_OK


# ---------------------------------------------------------------- decompose


def decomposition_doc(result) -> dict:
    if isinstance(result, InfeasibilityCertificate):
        return {
            "kind": "infeasibility",
            "dual": dump_rows((x, y, v) for (x, y), v in sorted(result.dual.items()) if v != 0),
            "pairing": fr(result.pairing),
        }
    return {
        "kind": "decomposition",
        "method": result.method,
        "phi": dump_rows(sorted(result.phi.items())),
        "h": dump_rows(sorted(result.h.items())),
        "psi": dump_rows(sorted(result.psi.items())),
    }


def cmd_decompose(args) -> int:
    inst = read_instance(args.path)
    S = inst.effective_support()
    if S is None:
        raise InstanceParseError("instance has neither support nor weights")
    f = read_payoff(args.payoff)
    try:
        result = wep_decompose(S, f)
    except ValueError as exc:
        raise InstanceParseError(str(exc)) from None
    if isinstance(result, InfeasibilityCertificate):
        ok = result.check(S, f)
    else:
        ok = result.replays(S, f)
    if not ok:
        raise InvariantViolation("decomposition output failed its own replay")
    _emit(_json(decomposition_doc(result)), args.out)
    return EXIT_OK


# ------------------------------------------------------------------ perturb


def perturbation_for(Q, allow_kernel: bool = False):
    """Cycle of 2-meshes first, then a free pool; optionally the raw kernel."""
    S = Q.support
    for mc in find_mesh_cycles(S):
        try:
            return perturb_along(Q, mc.perturbation()), "mesh-cycle"
        except (ValueError, DegeneratePoolError):
            continue
    pool = find_free_pool(S)
    if pool is not None:
        return build_pool_perturbation(Q, pool), "free-pool"
    if allow_kernel:
        res = extremality_kernel(Q)
        if not res:
            return perturb_along(Q, res.kernel_basis[0]), "kernel"
    return None, None


def cmd_perturb(args) -> int:
    inst = read_instance(args.path)
    Q = inst.coupling()
    if Q is None:
        raise InstanceParseError("invalid-coupling: instance has no weights")
    rep = validate_coupling(Q)
    if not rep.ok:
        raise InstanceParseError(f"invalid-coupling: {rep.violations[0]}")
    if extremality_kernel(Q):
        _emit(_json({"kind": "no-pool", "reason": "coupling is extremal"}), args.out)
        return EXIT_OK
    pair, source = perturbation_for(Q, args.kernel_fallback)
    if pair is None:
        _emit(_json({"kind": "no-pool", "reason": "no cycle of 2-meshes or free pool found"}), args.out)
        return EXIT_OK
    q1 = InstanceFile.from_coupling(pair.q1)
    q2 = InstanceFile.from_coupling(pair.q2)
    doc = {
        "kind": "perturbation",
        "source": source,
        "scale": fr(pair.scale),
        "alpha": [fr(a) for a in pair.alpha],
        "direction": dump_rows((x, y, v) for (x, y), v in sorted(pair.direction.items())),
        "q1": q1.to_dict(),
        "q2": q2.to_dict(),
    }
    if args.prefix:
        _emit(q1.dumps() + "\n", args.prefix + ".q1.json")
        _emit(q2.dumps() + "\n", args.prefix + ".q2.json")
    _emit(_json(doc), args.out)
    return EXIT_OK


# ----------------------------------------------------------------- generate


def _load_params(text: Optional[str]) -> dict:
    if not text:
        return {}
    if text.startswith("@"):
        with open(text[1:], encoding="utf-8") as fh:
            text = fh.read()
    doc = loads_exact(text)
    if not isinstance(doc, dict):
        raise InstanceParseError("--params must be a JSON object")
    return doc


def _measure(rows) -> DiscreteMeasure:
    return DiscreteMeasure.from_pairs((parse_rational(p), parse_rational(m)) for p, m in rows)


def generate(kind: str, params: dict, seed: int) -> InstanceFile:
    meta = {"generator": kind, "seed": seed}
    if kind == "binomial":
        mu = _measure(params.get("mu", [["1", "1"]]))
        spreads = {parse_rational(x): (d, u) for x, d, u in params.get("spreads", [["1", "1/2", "3/2"]])}
        return InstanceFile.from_coupling(gen_binomial(mu, spreads), meta)
    if kind == "hk":
        hk = HKParams(
            a=parse_rational(params.get("a", "2")),
            b=parse_rational(params.get("b", "3")),
            inner=tuple(parse_rational(x) for x in params.get("inner", ["2", "3"])),
            p={parse_rational(x): parse_rational(v) for x, v in params.get("p", [["2", "3/2"], ["3", "1"]])},
            q={parse_rational(x): parse_rational(v) for x, v in params.get("q", [["2", "5"], ["3", "4"]])},
            stay=frozenset(parse_rational(x) for x in params.get("stay", [])),
            outer=tuple(parse_rational(x) for x in params.get("outer", [])),
        )
        S = gen_hk_trinomial(hk)
        return InstanceFile.from_coupling(make_positive_coupling(S), meta)
    if kind == "lp-vertex":
        if "mu" in params and "nu" in params:
            mu, nu = _measure(params["mu"]), _measure(params["nu"])
        else:
            mu, nu = gen_random_instance(seed, int(params.get("n_mu", 3)), int(params.get("n_nu", 5)))
        cost = get_cost(str(params.get("cost", "pow3")))
        sense = str(params.get("sense", "min"))
        if sense not in ("min", "max"):
            raise GeneratorError("sense must be min or max")
        sol = solve_mot_lp(mu, nu, cost, sense)
        meta.update({"cost": cost.name, "sense": sense, "objective": fr(sol.objective)})
        return InstanceFile.from_coupling(sol.coupling, meta)
    if kind == "random":
        mu, nu = gen_random_instance(seed, int(params.get("n_mu", 2)), int(params.get("n_nu", 4)))
        return InstanceFile(mu, nu, None, None, meta)
    raise UsageError(f"unknown generator {kind!r}")


def cmd_generate(args) -> int:
    inst = generate(args.kind, _load_params(args.params), args.seed)
    _emit(inst.dumps() + "\n", args.out)
    return EXIT_OK


# --------------------------------------------------------------------- fuzz


def cmd_fuzz(args) -> int:
    from .fuzz import run_fuzz

    summary, _ = run_fuzz(
        max_x=args.max_x,
        max_y=args.max_y,
        budget=args.budget,
        seed=args.seed,
        threads=args.threads,
        log_path=args.log,
    )
    _emit(_json(summary.to_dict()), args.out)
    return EXIT_INTERNAL if summary.violations else EXIT_OK


# ------------------------------------------------------------------- verify


def cmd_verify(args) -> int:
    inst = read_instance(args.path)
    with open(args.certificate, encoding="utf-8") as fh:
        try:
            doc = json.loads(fh.read())
        except json.JSONDecodeError as exc:
            raise InstanceParseError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceParseError("certificate must be a JSON object")
    if "verdicts" in doc:
        rows = verify_report(inst, doc)
        ok = all(r[1] for r in rows)
        out = {"ok": ok, "checks": [{"check": c, "ok": o, "note": n} for c, o, n in rows]}
    elif doc.get("kind") in ("decomposition", "infeasibility"):
        if not args.payoff:
            raise UsageError("--payoff is required to verify a decomposition")
        ok = verify_decomposition(inst, doc, read_payoff(args.payoff))
        out = {"ok": ok, "kind": doc["kind"]}
    elif doc.get("kind") == "perturbation":
        ok = verify_perturbation(inst, doc)
        out = {"ok": ok, "kind": "perturbation"}
    else:
        raise InstanceParseError("unrecognised certificate document")
    _emit(_json(out), args.out)
    return EXIT_OK if ok else EXIT_REJECTED


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="motsupport", description="Exact analysis of discrete martingale transport supports.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--threads", type=int, default=1, help="worker count for batch and fuzz modes")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="run the support checks on instance files")
    a.add_argument("paths", nargs="+")
    fmt = a.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON report (default)")
    fmt.add_argument("--text", action="store_true", help="one line per check")
    a.add_argument("--checks", help="comma-separated subset of: " + ", ".join(CHECKS))
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)

    d = sub.add_parser("decompose", parents=[common], help="semi-static decomposition of a payoff, or an infeasibility certificate")
    d.add_argument("path")
    d.add_argument("payoff")
    d.add_argument("--out")
    d.set_defaults(func=cmd_decompose)

    q = sub.add_parser("perturb", parents=[common], help="split a non-extremal coupling into two")
    q.add_argument("path")
    q.add_argument("--prefix", help="also write PREFIX.q1.json and PREFIX.q2.json")
    q.add_argument("--kernel-fallback", action="store_true", help="use a raw kernel vector when no pool is found")
    q.add_argument("--out")
    q.set_defaults(func=cmd_perturb)

    g = sub.add_parser("generate", parents=[common], help="emit an instance file")
    g.add_argument("kind", choices=("binomial", "hk", "lp-vertex", "random"))
    g.add_argument("--params", help="JSON object, or @file")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fuzz", parents=[common], help="enumerate supports and cross-check every implication")
    f.add_argument("--max-x", type=int, default=3)
    f.add_argument("--max-y", type=int, default=4)
    f.add_argument("--budget", type=int, default=None)
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--log", help="JSONL file for non-extremal supports without a found pool")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fuzz)

    v = sub.add_parser("verify", parents=[common], help="replay a report, decomposition or perturbation against an instance")
    v.add_argument("path")
    v.add_argument("certificate")
    v.add_argument("--payoff")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except (UsageError, OSError) + INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InvariantViolation, AssertionError) as exc:
        print(f"internal invariant violation: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
