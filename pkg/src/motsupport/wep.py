"""Exact semi-static decompositions, S-affine functions and 2-nets."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Mapping, Optional, Tuple, Union

from . import linalg
from .combinatorics import erase_once, find_2link_ordering, is_k_erased
from .support import Mesh, Path, Support


class NotOneErasedError(ValueError):
    pass


def _require_1_erased(S: Support):
    if not is_k_erased(S, 1):
        bad = [x for x in S.x_points if len(S.ysec(x)) < 2]
        raise NotOneErasedError(f"not-1-erased: single-point sections at {bad}")


def one_erased_core(S: Support) -> Support:
    """Drop every x whose section is a single point (leaves a 1-erased set)."""
    return erase_once(S, "E1y")


# ------------------------------------------------------------ WEP operator


def wep_operator(S: Support):
    """Matrix of ``(phi, h, psi) -> phi(x) + h(x)(y - x) - psi(y)`` on S.

    Columns are ``phi`` over S_X, then ``h`` over S_X, then ``psi`` over S_Y.
    Returns ``(matrix, row_paths, columns)``.
    """
    xs, ys = S.x_points, S.y_points
    xi = {x: i for i, x in enumerate(xs)}
    yi = {y: i for i, y in enumerate(ys)}
    nx = len(xs)
    ncols = 2 * nx + len(ys)
    rows = []
    paths = S.sorted_paths
    for x, y in paths:
        row = [Fraction(0)] * ncols
        row[xi[x]] = Fraction(1)
        row[nx + xi[x]] = y - x
        row[2 * nx + yi[y]] = Fraction(-1)
        rows.append(row)
    cols = [("phi", x) for x in xs] + [("h", x) for x in xs] + [("psi", y) for y in ys]
    return rows, paths, cols


@dataclass(frozen=True)
class WepResult:
    holds: bool
    rank: int
    n_paths: int
    cokernel_witness: Optional[Dict[Path, Fraction]] = None

    def __bool__(self):
        return self.holds


def wep_holds(S: Support) -> WepResult:
    """Decide the WEP by exact rank of the decomposition operator.

    When it fails, the witness is a payoff ``f`` orthogonal to the operator
    image (so ``f`` itself has no decomposition).
    """
    if not S:
        return WepResult(True, 0, 0)
    T, paths, _ = wep_operator(S)
    r = linalg.rank(T)
    if r == len(paths):
        return WepResult(True, r, len(paths))
    v = linalg.left_nullspace(T)[0]
    return WepResult(False, r, len(paths), dict(zip(paths, v)))


@dataclass(frozen=True)
class WepDecomposition:
    phi: Dict[Fraction, Fraction]
    h: Dict[Fraction, Fraction]
    psi: Dict[Fraction, Fraction]
    method: str = "linear-solve"

    def value(self, x, y) -> Fraction:
        x, y = Fraction(x), Fraction(y)
        return self.phi[x] + self.h[x] * (y - x) - self.psi[y]

    def residuals(self, S: Support, f: Mapping) -> Dict[Path, Fraction]:
        return {p: Fraction(f[p]) - self.value(*p) for p in S.sorted_paths}

    def replays(self, S: Support, f: Mapping) -> bool:
        return all(r == 0 for r in self.residuals(S, f).values())


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """``dual`` annihilates the operator image and pairs nonzero with ``f``."""

    dual: Dict[Path, Fraction]
    pairing: Fraction

    def check(self, S: Support, f: Mapping) -> bool:
        T, paths, _ = wep_operator(S)
        y = [self.dual.get(p, Fraction(0)) for p in paths]
        if any(v != 0 for v in linalg.vecmat(y, T)):
            return False
        pairing = linalg.dot(y, [Fraction(f[p]) for p in paths])
        return pairing != 0 and pairing == self.pairing


def _normalize_payoff(S: Support, f: Mapping) -> Dict[Path, Fraction]:
    g = {(Fraction(x), Fraction(y)): Fraction(v) for (x, y), v in f.items()}
    missing = [p for p in S.sorted_paths if p not in g]
    if missing:
        raise ValueError(f"payoff-domain-mismatch: no value on {missing[:3]}")
    return g


def _decompose_by_ordering(S: Support, f: Dict[Path, Fraction], order) -> WepDecomposition:
    phi: Dict[Fraction, Fraction] = {}
    h: Dict[Fraction, Fraction] = {}
    psi: Dict[Fraction, Fraction] = {}
    for x in order:
        ys = S.ysec(x)
        known = [y for y in ys if y in psi]
        if len(ys) == 1:
            y = ys[0]
            psi.setdefault(y, Fraction(0))
            h[x] = Fraction(0)
            phi[x] = f[(x, y)] + psi[y]
            continue
        # gauge freedom: unknown anchor values are fixed to zero
        anchors = known[:2]
        for y in ys:
            if len(anchors) == 2:
                break
            if y not in anchors:
                anchors.append(y)
                psi[y] = Fraction(0)
        y1, y2 = sorted(anchors)
        h[x] = (f[(x, y2)] - f[(x, y1)] + psi[y2] - psi[y1]) / (y2 - y1)
        phi[x] = f[(x, y1)] - h[x] * (y1 - x) + psi[y1]
        for y in ys:
            if y not in (y1, y2):
                psi[y] = phi[x] + h[x] * (y - x) - f[(x, y)]
    return WepDecomposition(phi, h, psi, "2link")


def wep_decompose(S: Support, f: Mapping) -> Union[WepDecomposition, InfeasibilityCertificate]:
    """Write ``f = phi(x) + h(x)(y - x) - psi(y)`` on S, or certify that no such triple exists."""
    g = _normalize_payoff(S, f)
    if not S:
        return WepDecomposition({}, {}, {}, "2link")
    ordering = find_2link_ordering(S)
    if ordering is not None:
        return _decompose_by_ordering(S, g, ordering.order)
    T, paths, cols = wep_operator(S)
    sol, cert = linalg.solve(T, [g[p] for p in paths])
    if sol is None:
        dual = dict(zip(paths, cert))
        return InfeasibilityCertificate(dual, linalg.dot(cert, [g[p] for p in paths]))
    phi, h, psi = {}, {}, {}
    for (kind, pt), v in zip(cols, sol):
        {"phi": phi, "h": h, "psi": psi}[kind][pt] = v
    return WepDecomposition(phi, h, psi, "linear-solve")


# ---------------------------------------------------------- S-affine space


def collinear(p1, p2, p3) -> bool:
    (a, fa), (b, fb), (c, fc) = p1, p2, p3
    return (fb - fa) * (c - a) == (fc - fa) * (b - a)


def is_affine_on(psi: Mapping, ys) -> bool:
    ys = sorted(ys)
    return all(
        collinear((ys[i], psi[ys[i]]), (ys[i + 1], psi[ys[i + 1]]), (ys[i + 2], psi[ys[i + 2]]))
        for i in range(len(ys) - 2)
    )


@dataclass(frozen=True)
class AffineBasis:
    ys: Tuple[Fraction, ...]
    basis: Tuple[Dict[Fraction, Fraction], ...]

    @property
    def dim(self) -> int:
        return len(self.basis)

    def slopes(self, S: Support, psi: Mapping) -> Dict[Fraction, Tuple[Fraction, Fraction]]:
        """Per-x ``(phi(x), h(x))`` of an S-affine ``psi`` from two section points."""
        out = {}
        for x in S.x_points:
            y1, y2 = S.ysec(x)[:2]
            h = (psi[y1] - psi[y2]) / (y1 - y2)
            phi = ((x - y2) * psi[y1] + (y1 - x) * psi[y2]) / (y1 - y2)
            out[x] = (phi, h)
        return out


def collinearity_constraints(S: Support):
    """One row per consecutive section triple; unknowns are psi over S_Y."""
    ys = S.y_points
    yi = {y: i for i, y in enumerate(ys)}
    rows = []
    for x in S.x_points:
        sec = S.ysec(x)
        for a, b, c in zip(sec, sec[1:], sec[2:]):
            row = [Fraction(0)] * len(ys)
            row[yi[a]] = -(c - b)
            row[yi[b]] = c - a
            row[yi[c]] = -(b - a)
            rows.append(row)
    return rows


def s_affine_space(S: Support) -> AffineBasis:
    """Exact basis of the functions on S_Y that are affine on every section."""
    _require_1_erased(S)
    ys = S.y_points
    rows = collinearity_constraints(S)
    vecs = linalg.nullspace(rows, ncols=len(ys)) if rows else linalg.nullspace([], ncols=len(ys))
    return AffineBasis(ys, tuple(dict(zip(ys, v)) for v in vecs))


def is_2net(A: Support) -> bool:
    _require_1_erased(A)
    space = s_affine_space(A)
    return all(is_affine_on(b, A.y_points) for b in space.basis)


# ------------------------------------------------------------------ 2-nets


@dataclass(frozen=True)
class TwoNet:
    """A 2-net together with a replayable construction.

    ``build`` is a nested certificate: ``("mesh", Mesh)`` for a mesh with at
    least two y-points, or ``("merge", left, right)`` for two nets sharing at
    least two y-points.
    """

    paths: Support
    build: tuple = field(compare=False, hash=False, default=())

    @property
    def x_points(self):
        return self.paths.x_points

    @property
    def y_points(self):
        return self.paths.y_points


def replay_net_build(build) -> Support:
    """Rebuild a net from its certificate, checking every merge; no linear algebra."""
    kind = build[0]
    if kind == "mesh":
        mesh = build[1]
        if len(mesh.ys) < 2:
            raise AssertionError("mesh leaf with fewer than two y-points")
        return Support(mesh.paths())
    if kind == "merge":
        left = replay_net_build(build[1])
        right = replay_net_build(build[2])
        if len(set(left.y_points) & set(right.y_points)) < 2:
            raise AssertionError("merged nets share fewer than two y-points")
        return left | right
    raise AssertionError(f"unknown build node {kind!r}")


@dataclass(frozen=True)
class SaturationResult:
    saturated: bool
    missing: Tuple[Path, ...] = ()

    def __bool__(self):
        return self.saturated


def check_saturated(A: Union[TwoNet, Support], S: Support) -> SaturationResult:
    paths = A.paths if isinstance(A, TwoNet) else A
    ax, ay = set(paths.x_points), set(paths.y_points)
    missing = tuple(
        p for p in S.sorted_paths if p[0] in ax and p[1] in ay and p not in paths.paths
    )
    return SaturationResult(not missing, missing)


def _grow_from(S: Support, seed: Mesh, witnesses: dict) -> TwoNet:
    paths = set(seed.paths())
    ny = set(seed.ys)
    nxs = {seed.x}
    build: tuple = ("mesh", seed)
    while True:
        step = None
        for z in S.x_points:
            sec = S.ysec(z)
            shared = [y for y in sec if y in ny]
            if len(shared) >= 2 and any((z, y) not in paths for y in sec):
                step = (z, sec, shared)
                break
        if step is None:
            return TwoNet(Support(frozenset(paths)), build)
        z, sec, shared = step
        if z not in nxs and len(shared) >= 3:
            pair = Mesh(z, shared[:2])
            wnet = Support(frozenset(paths | pair.paths()))
            witnesses.setdefault(wnet, TwoNet(wnet, ("merge", build, ("mesh", pair))))
        mesh = Mesh(z, sec)
        paths |= mesh.paths()
        ny.update(sec)
        nxs.add(z)
        build = ("merge", build, ("mesh", mesh))


def grow_2nets(S: Support) -> List[TwoNet]:
    """Best-effort search for 2-nets of a 1-erased S.

    Every binomial sub-mesh seeds a growth that absorbs full meshes sharing
    two or more y-points with the current net; the closures are then merged
    while any two share two y-points. The result lists those maximal
    closures first, followed by every intermediate net met during growth
    that is missing a path of S (a non-saturation witness). The search is
    sound but may miss nets; :func:`wep_holds` is the ground truth.
    """
    _require_1_erased(S)
    witnesses: Dict[Support, TwoNet] = {}
    closures: Dict[Support, TwoNet] = {}
    for x in S.x_points:
        for y1, y2 in combinations(S.ysec(x), 2):
            net = _grow_from(S, Mesh(x, (y1, y2)), witnesses)
            closures.setdefault(net.paths, net)
    nets = list(closures.values())
    merged = True
    while merged:
        merged = False
        for i, j in combinations(range(len(nets)), 2):
            a, b = nets[i], nets[j]
            if len(set(a.y_points) & set(b.y_points)) >= 2:
                union = TwoNet(a.paths | b.paths, ("merge", a.build, b.build))
                nets = [n for k, n in enumerate(nets) if k not in (i, j)] + [union]
                merged = True
                break
    uniq: Dict[Support, TwoNet] = {}
    for n in sorted(nets, key=lambda n: n.paths.sorted_paths):
        uniq.setdefault(n.paths, n)
    out = list(uniq.values())
    for w in sorted(witnesses.values(), key=lambda n: n.paths.sorted_paths):
        if w.paths not in uniq and not check_saturated(w, S):
            out.append(w)
    return out


@dataclass(frozen=True)
class SaturationReport:
    wep: bool
    nets: Tuple[TwoNet, ...]
    non_saturated: Tuple[Tuple[TwoNet, Tuple[Path, ...]], ...]
    analysed: Support

    @property
    def all_saturated(self) -> bool:
        return not self.non_saturated

    @property
    def violation(self) -> bool:
        """WEP with a non-saturated net: impossible, so this flags a bug."""
        return self.wep and not self.all_saturated

    @property
    def search_incomplete(self) -> bool:
        """WEP fails but every net found is saturated: the search missed a net."""
        return not self.wep and self.all_saturated


def verify_saturation_theorem(S: Support) -> SaturationReport:
    """Cross-check the rank oracle against saturation of the nets found.

    Single-point sections are removed first; this changes neither the WEP
    nor the nets.
    """
    core = one_erased_core(S)
    wep = wep_holds(core).holds
    nets = tuple(grow_2nets(core)) if core else ()
    bad = []
    for net in nets:
        res = check_saturated(net, core)
        if not res:
            bad.append((net, res.missing))
    return SaturationReport(wep, nets, tuple(bad), core)
