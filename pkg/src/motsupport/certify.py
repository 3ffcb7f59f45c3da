"""Replay certificates against an instance.

Nothing here calls the deciding routines: every check is a direct count,
a substitution, or a determinant computed by a local elimination.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Mapping, Tuple

from .io import InstanceFile
from .rational import parse_rational

NO_CERT = "no-certificate (oracle-only)"


class CertificateError(ValueError):
    pass


def _q(v) -> Fraction:
    return parse_rational(v)


def _paths(rows) -> set:
    return {(_q(x), _q(y)) for x, y in rows}


def _vector(rows) -> Dict[Tuple[Fraction, Fraction], Fraction]:
    return {(_q(x), _q(y)): _q(w) for x, y, w in rows}


def _sections(paths) -> Tuple[Dict, Dict]:
    ysec: Dict[Fraction, set] = {}
    xsec: Dict[Fraction, set] = {}
    for x, y in paths:
        ysec.setdefault(x, set()).add(y)
        xsec.setdefault(y, set()).add(x)
    return ysec, xsec


def _nonsingular(m: List[List[Fraction]]) -> bool:
    n = len(m)
    if any(len(r) != n for r in m):
        return False
    a = [list(r) for r in m]
    for c in range(n):
        piv = next((r for r in range(c, n) if a[r][c] != 0), None)
        if piv is None:
            return False
        a[c], a[piv] = a[piv], a[c]
        for r in range(c + 1, n):
            f = a[r][c] / a[c][c]
            if f:
                a[r] = [u - f * v for u, v in zip(a[r], a[c])]
    return True


def _call(atoms, k) -> Fraction:
    return sum((max(p - k, 0) * w for p, w in atoms), Fraction(0))


def _preserves(paths, v: Mapping) -> bool:
    """Direct check that ``v`` moves no marginal mass and no first moment."""
    if not set(v) <= paths:
        return False
    mu: Dict = {}
    nu: Dict = {}
    first: Dict = {}
    for (x, y), w in v.items():
        mu[x] = mu.get(x, 0) + w
        nu[y] = nu.get(y, 0) + w
        first[x] = first.get(x, 0) + w * y
    return all(t == 0 for d in (mu, nu, first) for t in d.values())


# ------------------------------------------------------------ per check


def _convex_order(inst, res, cert):
    mu, nu = inst.mu.atoms, inst.nu.atoms
    m1 = sum((p * w for p, w in mu), Fraction(0))
    m2 = sum((p * w for p, w in nu), Fraction(0))
    kind = cert["type"]
    if kind == "mean-mismatch":
        return res is False and m1 != m2
    if kind == "strike":
        k = _q(cert["strike"])
        return res is False and _call(mu, k) > _call(nu, k)
    if kind == "call-grid":
        grid = {_q(k) for k, _, _ in cert["strikes"]}
        atoms = {p for p, _ in mu} | {p for p, _ in nu}
        return res is True and m1 == m2 and atoms <= grid and all(_call(mu, k) <= _call(nu, k) for k in grid)
    return False


def _validate(inst, res, cert):
    w = inst.weights
    rows: Dict = {}
    cols: Dict = {}
    first: Dict = {}
    for (x, y), v in w.items():
        rows[x] = rows.get(x, 0) + v
        cols[y] = cols.get(y, 0) + v
        first[x] = first.get(x, 0) + v * y
    mu = dict(inst.mu.atoms) if inst.mu else rows
    nu = dict(inst.nu.atoms) if inst.nu else cols
    ok = rows == mu and cols == nu and all(first[x] == x * rows[x] for x in rows)
    return res is ok and (ok == (not cert["violations"]))


def _screen(paths, res, cert):
    ysec, _ = _sections(paths)
    pairs = cert["pairs"]
    for a, b, ys in pairs:
        a, b = _q(a), _q(b)
        ys = {_q(y) for y in ys}
        if len(ys) < 3 or not ys <= ysec.get(a, set()) & ysec.get(b, set()):
            return False
    if not pairs:
        # absence is checked by direct counting over all pairs
        return res is False and all(len(ysec[a] & ysec[b]) < 3 for a, b in combinations(sorted(ysec), 2))
    return res is True


def _two_link(paths, res, cert):
    ysec, _ = _sections(paths)
    if cert["type"] == "ordering":
        order = [_q(x) for x in cert["order"]]
        if sorted(order) != sorted(ysec):
            return False
        seen: set = set()
        for x in order:
            if len(ysec[x] & seen) > 2:
                return False
            seen |= ysec[x]
        return res is True
    block = [_q(x) for x in cert["block"]]
    if not block or not set(block) <= set(ysec):
        return False
    for x in block:
        others = set().union(*(ysec[z] for z in block if z != x))
        if len(others & ysec[x]) < 3:
            return False
    return res is False


def _erase_step(paths: set, op: str) -> set:
    ysec, xsec = _sections(paths)
    if op == "E1x":
        return {p for p in paths if len(xsec[p[1]]) == 1}
    if op == "E1y":
        return {p for p in paths if len(ysec[p[0]]) == 1}
    if op == "E2y":
        return {p for p in paths if len(ysec[p[0]]) == 2}
    raise CertificateError(f"unknown operator {op}")


def _erasability(paths, res, cert):
    cur = set(paths)
    for op, removed in cert["steps"]:
        drop = _erase_step(cur, op)
        if drop != _paths(removed):
            return False
        cur -= drop
    if cur != _paths(cert["fixpoint"]):
        return False
    if any(_erase_step(cur, op) for op in ("E1x", "E1y", "E2y")):
        return False
    return res is (not cur)


def _wep_rows(paths):
    """Rows of ``phi(x) + h(x)(y - x) - psi(y)`` keyed by column label."""
    out = []
    for x, y in sorted(paths):
        out.append({("phi", x): Fraction(1), ("h", x): y - x, ("psi", y): Fraction(-1)})
    return out


def _wep(paths, res, cert):
    rows = _wep_rows(paths)
    if cert["type"] == "invertible-minor":
        cols = [(k, _q(p)) for k, p in cert["columns"]]
        if len(cols) != len(rows) or len(set(cols)) != len(cols):
            return False
        return res is True and _nonsingular([[r.get(c, Fraction(0)) for c in cols] for r in rows])
    v = _vector(cert["vector"])
    if not v or not set(v) <= paths:
        return False
    acc: Dict = {}
    for (x, y), w in v.items():
        for c, a in {("phi", x): 1, ("h", x): y - x, ("psi", y): -1}.items():
            acc[c] = acc.get(c, 0) + w * a
    return res is False and all(t == 0 for t in acc.values())


def _replay_build(node, paths) -> set:
    if node[0] == "mesh":
        x = _q(node[1])
        ys = {_q(y) for y in node[2]}
        mesh = {(x, y) for y in ys}
        if len(ys) < 2 or not mesh <= paths:
            raise CertificateError("bad mesh leaf")
        return mesh
    left = _replay_build(node[1], paths)
    right = _replay_build(node[2], paths)
    if len({y for _, y in left} & {y for _, y in right}) < 2:
        raise CertificateError("merge shares fewer than two y-points")
    return left | right


def _saturation(paths, res, cert):
    core = _paths(cert["core"])
    # the core is S without its single-point sections
    ysec, _ = _sections(paths)
    if core != {(x, y) for x, y in paths if len(ysec[x]) >= 2}:
        return False
    for net in cert["nets"]:
        try:
            built = _replay_build(net["build"], core)
        except CertificateError:
            return False
        if built != _paths(net["paths"]):
            return False
        xs = {x for x, _ in built}
        ys = {y for _, y in built}
        missing = {p for p in core if p[0] in xs and p[1] in ys} - built
        if missing != _paths(net["missing"]):
            return False
    any_missing = any(net["missing"] for net in cert["nets"])
    return res["all-saturated"] is (not any_missing)


def _constraint_rows(paths):
    ysec, xsec = _sections(paths)
    labels = [("nu", y) for y in sorted(xsec)] + [("mu", x) for x in sorted(ysec)] + [("martingale", x) for x in sorted(ysec)]

    def entry(label, p):
        kind, pt = label
        if kind == "nu":
            return Fraction(int(p[1] == pt))
        if kind == "mu":
            return Fraction(int(p[0] == pt))
        return p[1] if p[0] == pt else Fraction(0)

    return labels, entry


def _extremality(paths, res, cert):
    if cert["type"] == "invertible-minor":
        labels, entry = _constraint_rows(paths)
        chosen = [(k, _q(p)) for k, p in cert["rows"]]
        if not set(chosen) <= set(labels) or len(set(chosen)) != len(chosen):
            return False
        cols = sorted(paths)
        if len(chosen) != len(cols):
            return False
        return res is True and _nonsingular([[entry(lab, p) for p in cols] for lab in chosen])
    v = _vector(cert["vector"])
    return res is False and bool(v) and _preserves(paths, v)


def _mesh_cycles(paths, res, cert):
    ysec, _ = _sections(paths)
    if len(cert["cycles"]) != res:
        return False
    for cyc in cert["cycles"]:
        meshes = [(_q(x), frozenset(_q(y) for y in ys)) for x, ys in cyc]
        if len(meshes) < 4 or len(meshes) % 2:
            return False
        for i, (x, ys) in enumerate(meshes):
            if len(ys) != 2 or not ys <= ysec.get(x, set()):
                return False
            nx_, nys = meshes[(i + 1) % len(meshes)]
            if i % 2 == 0 and (ys != nys or x == nx_):
                return False
            if i % 2 == 1 and (x != nx_ or ys == nys):
                return False
        delta: Dict = {}
        for i, (x, ys) in enumerate(meshes):
            sign = 1 if i % 2 == 0 else -1
            y, yp = sorted(ys)
            delta[(x, y)] = delta.get((x, y), 0) + sign * (-yp / (y - yp))
            delta[(x, yp)] = delta.get((x, yp), 0) + sign * (y / (y - yp))
        delta = {p: v for p, v in delta.items() if v}
        if not delta or not _preserves(paths, delta):
            return False
    return True


def _free_pool(paths, res, cert):
    cycles = [[_q(v) for v in c] for c in cert["cycles"]]
    edge_sets = []
    xs: set = set()
    for nodes in cycles:
        k = len(nodes)
        cx, cy = nodes[0::2], nodes[1::2]
        if k < 4 or k % 2 or len(set(cx)) != len(cx) or len(set(cy)) != len(cy):
            return False
        edges = {(nodes[i], nodes[(i + 1) % k]) for i in range(0, k, 2)} | {(nodes[i], nodes[i - 1]) for i in range(0, k, 2)}
        if not edges <= paths:
            return False
        edge_sets.append(edges)
        xs |= set(cx)
    if len(xs) != len(cycles):
        return False
    for i, e in enumerate(edge_sets):
        if not e - set().union(*(f for j, f in enumerate(edge_sets) if j != i)):
            return False
    if "direction" in cert:
        delta = _vector(cert["direction"])
        return res is True and bool(delta) and _preserves(paths, delta)
    return res is True


def verify_report(inst: InstanceFile, report: Mapping) -> List[Tuple[str, bool, str]]:
    """Replay every certificate in an analysis report.

    Returns ``(check, ok, note)`` rows; oracle-only verdicts are listed as
    accepted with a note, skipped checks likewise.
    """
    S = inst.effective_support()
    paths = set(S.paths) if S is not None else set()
    out = []
    for name, v in report["verdicts"].items():
        res, cert = v["result"], v["certificate"]
        if cert == NO_CERT:
            out.append((name, True, "oracle-only"))
            continue
        handler = {
            "convex-order": lambda: _convex_order(inst, res, cert),
            "validate": lambda: _validate(inst, res, cert),
            "intersection-screen": lambda: _screen(paths, res, cert),
            "2link": lambda: _two_link(paths, res, cert),
            "erasability": lambda: _erasability(paths, res, cert),
            "wep": lambda: _wep(paths, res, cert),
            "2nets-saturation": lambda: _saturation(paths, res, cert),
            "extremality": lambda: _extremality(_coupling_paths(inst, paths), res, cert),
            "mesh-cycles": lambda: _mesh_cycles(paths, res, cert),
            "free-pool": lambda: _free_pool(paths, res, cert),
        }.get(name)
        if handler is None:
            out.append((name, False, "unknown check"))
            continue
        try:
            ok = bool(handler())
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
            ok, note = False, f"malformed certificate: {exc}"
        else:
            note = "replayed" if ok else "certificate rejected"
        out.append((name, ok, note))
    return out


def _coupling_paths(inst, paths):
    return set(inst.weights) if inst.weights is not None else paths


def verify_decomposition(inst: InstanceFile, doc: Mapping, payoff: Mapping) -> bool:
    """Substitute a decomposition (or pair a dual certificate) against ``payoff``."""
    S = inst.effective_support()
    paths = set(S.paths)
    f = {(Fraction(x), Fraction(y)): Fraction(v) for (x, y), v in payoff.items()}
    if not paths <= set(f):
        return False
    if doc["kind"] == "decomposition":
        phi = {_q(k): _q(v) for k, v in doc["phi"]}
        h = {_q(k): _q(v) for k, v in doc["h"]}
        psi = {_q(k): _q(v) for k, v in doc["psi"]}
        try:
            return all(phi[x] + h[x] * (y - x) - psi[y] == f[(x, y)] for x, y in paths)
        except KeyError:
            return False
    if doc["kind"] == "infeasibility":
        y = _vector(doc["dual"])
        if not set(y) <= paths:
            return False
        acc: Dict = {}
        for (x, yy), w in y.items():
            for c, a in {("phi", x): 1, ("h", x): yy - x, ("psi", yy): -1}.items():
                acc[c] = acc.get(c, 0) + w * a
        pairing = sum((w * f[p] for p, w in y.items()), Fraction(0))
        return all(t == 0 for t in acc.values()) and pairing != 0 and pairing == _q(doc["pairing"])
    return False


def verify_perturbation(inst: InstanceFile, doc: Mapping) -> bool:
    """Both perturbed couplings are valid and average to the input."""
    q1 = InstanceFile.from_dict(doc["q1"])
    q2 = InstanceFile.from_dict(doc["q2"])
    w0 = inst.weights
    if w0 is None or q1.weights is None or q2.weights is None:
        return False
    keys = set(w0) | set(q1.weights) | set(q2.weights)
    mid = all(q1.weights.get(p, 0) + q2.weights.get(p, 0) == 2 * w0.get(p, 0) for p in keys)
    ok = []
    for q in (q1, q2):
        fake = InstanceFile(inst.mu, inst.nu, None, q.weights)
        ok.append(_validate(fake, True, {"violations": []}))
    return mid and q1.weights != q2.weights and all(ok)
