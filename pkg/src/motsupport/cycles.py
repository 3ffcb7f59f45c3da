"""Extremality by kernel rank, classical cycles, cycles of 2-meshes and free-cycle pools."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx

from . import linalg
from .support import MartingaleCoupling, Mesh, Path, Support, validate_coupling


class InvalidCouplingError(ValueError):
    pass


class DegeneratePoolError(ValueError):
    pass


# ------------------------------------------------------------- extremality


def constraint_matrix(S: Support):
    """Rows: nu-mass per y, mu-mass per x, first moment per x; columns: paths of S."""
    paths = S.sorted_paths
    col = {p: j for j, p in enumerate(paths)}
    rows, labels = [], []
    for y in S.y_points:
        row = [Fraction(0)] * len(paths)
        for x in S.xsec(y):
            row[col[(x, y)]] = Fraction(1)
        rows.append(row)
        labels.append(("nu", y))
    for x in S.x_points:
        row = [Fraction(0)] * len(paths)
        for y in S.ysec(x):
            row[col[(x, y)]] = Fraction(1)
        rows.append(row)
        labels.append(("mu", x))
    for x in S.x_points:
        row = [Fraction(0)] * len(paths)
        for y in S.ysec(x):
            row[col[(x, y)]] = y
        rows.append(row)
        labels.append(("martingale", x))
    return rows, paths, labels


def preserves_constraints(S: Support, v: Dict[Path, Fraction]) -> bool:
    """True when ``v`` moves no marginal mass and no conditional first moment."""
    rows, paths, _ = constraint_matrix(S)
    vec = [Fraction(v.get(p, 0)) for p in paths]
    return all(r == 0 for r in linalg.matvec(rows, vec))


@dataclass(frozen=True)
class ExtremalityResult:
    extremal: bool
    kernel_basis: Tuple[Dict[Path, Fraction], ...] = ()

    def __bool__(self):
        return self.extremal


def extremality_kernel(Q: MartingaleCoupling) -> ExtremalityResult:
    """Q is extremal in M(mu, nu) iff no nonzero signed measure on supp(Q)
    keeps both marginals and the martingale property."""
    report = validate_coupling(Q)
    if not report.ok:
        raise InvalidCouplingError(f"invalid-coupling: {report.violations[:3]}")
    S = Q.support
    rows, paths, _ = constraint_matrix(S)
    if linalg.rank(rows) == len(paths):
        return ExtremalityResult(True)
    basis = tuple(dict(zip(paths, v)) for v in linalg.nullspace(rows))
    return ExtremalityResult(False, basis)


# ------------------------------------------------------------------ cycles


@dataclass(frozen=True)
class Cycle:
    """Alternating closed walk ``x1, y, x, y, ..., (x1)``; the closing x is implicit."""

    nodes: Tuple[Fraction, ...]

    @classmethod
    def canonical(cls, nodes: Sequence[Fraction]) -> "Cycle":
        """Rotate so the smallest x leads; orient toward the smaller adjacent y."""
        nodes = [Fraction(v) for v in nodes]
        k = len(nodes)
        xs_at = range(0, k, 2)
        start = min(xs_at, key=lambda i: nodes[i])
        rot = nodes[start:] + nodes[:start]
        if rot[1] > rot[-1]:
            rot = [rot[0]] + rot[1:][::-1]
        return cls(tuple(rot))

    @property
    def points(self) -> Tuple[Fraction, ...]:
        return self.nodes + (self.nodes[0],)

    @property
    def x_points(self) -> Tuple[Fraction, ...]:
        return self.nodes[0::2]

    @property
    def y_points(self) -> Tuple[Fraction, ...]:
        return self.nodes[1::2]

    def signed_paths(self) -> List[Tuple[Path, int]]:
        """Outgoing paths (x -> next y) carry +1, incoming ones -1."""
        out = []
        k = len(self.nodes)
        for i in range(0, k, 2):
            x, y_out, y_in = self.nodes[i], self.nodes[(i + 1) % k], self.nodes[i - 1]
            out.append(((x, y_out), 1))
            out.append(((x, y_in), -1))
        return out

    def paths(self) -> frozenset:
        return frozenset(p for p, _ in self.signed_paths())

    def gamma(self, x) -> Fraction:
        """Right-hand point of the outgoing path at x minus that of the incoming path."""
        k = len(self.nodes)
        i = self.nodes.index(Fraction(x), 0)
        while i % 2:
            i = self.nodes.index(Fraction(x), i + 1)
        return self.nodes[(i + 1) % k] - self.nodes[i - 1]

    def perturbation(self) -> Dict[Path, Fraction]:
        out: Dict[Path, Fraction] = {}
        for p, s in self.signed_paths():
            out[p] = out.get(p, Fraction(0)) + s
        return {p: v for p, v in out.items() if v}

    def is_valid_in(self, S: Support) -> bool:
        xs, ys = self.x_points, self.y_points
        if len(xs) < 2 or len(xs) != len(ys):
            return False
        if len(set(xs)) != len(xs) or len(set(ys)) != len(ys):
            return False
        return self.paths() <= S.paths


def _bipartite_graph(S: Support) -> nx.Graph:
    g = nx.Graph()
    for x, y in S.sorted_paths:
        g.add_edge(("x", x), ("y", y))
    return g


def _cycle_from_nodes(node_list) -> Cycle:
    k = next(i for i, n in enumerate(node_list) if n[0] == "x")
    rot = node_list[k:] + node_list[:k]
    return Cycle.canonical([v for _, v in rot])


def cycle_basis(S: Support) -> List[Cycle]:
    """Fundamental cycle basis of the bipartite path graph, canonicalized."""
    g = _bipartite_graph(S)
    cycles = [_cycle_from_nodes(c) for c in nx.cycle_basis(g)]
    return sorted(cycles, key=lambda c: (len(c.nodes), c.nodes))


def cycle_rank(S: Support) -> int:
    if not S:
        return 0
    comps = nx.number_connected_components(_bipartite_graph(S))
    return len(S) - len(S.x_points) - len(S.y_points) + comps


# ---------------------------------------------------------- mesh cycles


@dataclass(frozen=True)
class MeshCycle:
    """Cyclic sequence of 2-meshes alternating shared y-pair / shared x."""

    meshes: Tuple[Mesh, ...]

    def perturbation(self) -> Dict[Path, Fraction]:
        """Unit-alpha perturbation: signs alternate along the cycle and each
        2-mesh ``(x; y, y')`` splits its mass as ``p = -y'/(y - y')`` on ``y``
        and ``q = y/(y - y')`` on ``y'``."""
        out: Dict[Path, Fraction] = {}
        for i, m in enumerate(self.meshes):
            sign = 1 if i % 2 == 0 else -1
            y, yp = sorted(m.ys)
            p = -yp / (y - yp)
            q = y / (y - yp)
            out[(m.x, y)] = out.get((m.x, y), Fraction(0)) + sign * p
            out[(m.x, yp)] = out.get((m.x, yp), Fraction(0)) + sign * q
        return {k: v for k, v in out.items() if v}

    def is_valid_in(self, S: Support) -> bool:
        ms = self.meshes
        if len(ms) < 4 or len(ms) % 2:
            return False
        for i, m in enumerate(ms):
            if not m.is_binomial or not m.paths() <= S.paths:
                return False
            nxt = ms[(i + 1) % len(ms)]
            if i % 2 == 0:
                if m.ys != nxt.ys or m.x == nxt.x:
                    return False
            elif m.x != nxt.x or m.ys == nxt.ys:
                return False
        return True

    def pool(self) -> List[Cycle]:
        """Classical 4-cycles from each consecutive pair sharing a y-pair."""
        out = []
        for i in range(0, len(self.meshes), 2):
            a, b = self.meshes[i], self.meshes[i + 1]
            y1, y2 = sorted(a.ys)
            out.append(Cycle.canonical((a.x, y1, b.x, y2)))
        return out


def find_mesh_cycles(S: Support) -> List[MeshCycle]:
    """Cycle basis of the graph linking each x to the y-pairs of its 2-meshes."""
    g = nx.Graph()
    for x in S.x_points:
        for pair in combinations(S.ysec(x), 2):
            g.add_edge(("x", x), ("p", pair))
    out = []
    for c in nx.cycle_basis(g):
        k = next(i for i, n in enumerate(c) if n[0] == "x")
        c = c[k:] + c[:k]
        xs = [v for t, v in c[0::2]]
        pairs = [v for t, v in c[1::2]]
        start = min(range(len(xs)), key=lambda i: xs[i])
        xs = xs[start:] + xs[:start]
        pairs = pairs[start:] + pairs[:start]
        if pairs[0] > pairs[-1]:
            xs = [xs[0]] + xs[1:][::-1]
            pairs = pairs[::-1]
        meshes = []
        n = len(xs)
        for i in range(n):
            meshes.append(Mesh(xs[i], pairs[i]))
            meshes.append(Mesh(xs[(i + 1) % n], pairs[i]))
        out.append(MeshCycle(tuple(meshes)))
    return sorted(out, key=lambda mc: [(m.x, tuple(sorted(m.ys))) for m in mc.meshes])


# ------------------------------------------------------------ cycle pools


@dataclass(frozen=True)
class CyclePool:
    cycles: Tuple[Cycle, ...]

    @property
    def x_points(self) -> Tuple[Fraction, ...]:
        return tuple(sorted({x for c in self.cycles for x in c.x_points}))

    @property
    def gamma(self) -> List[List[Fraction]]:
        xs = self.x_points
        return [[c.gamma(x) if x in c.x_points else Fraction(0) for x in xs] for c in self.cycles]

    def is_free(self) -> bool:
        sets = [c.paths() for c in self.cycles]
        for i, s in enumerate(sets):
            others = frozenset().union(*(t for j, t in enumerate(sets) if j != i))
            if not s - others:
                return False
        return True

    def is_valid_in(self, S: Support) -> bool:
        n = len(self.cycles)
        return (
            n >= 2
            and len(self.x_points) == n
            and all(c.is_valid_in(S) for c in self.cycles)
            and self.is_free()
            and all(sum(row) == 0 for row in self.gamma)
        )


def _split_eulerian(edges) -> List[Cycle]:
    g = nx.Graph()
    g.add_edges_from(edges)
    out = []
    while g.number_of_edges():
        start = min(n for n in g.nodes if g.degree(n) and n[0] == "x")
        cyc = nx.find_cycle(g, source=start)
        nodes = [u for u, _ in cyc]
        out.append(_cycle_from_nodes(nodes))
        g.remove_edges_from(cyc)
        g.remove_nodes_from([n for n in list(g.nodes) if g.degree(n) == 0])
    return out


def candidate_cycles(S: Support) -> List[Cycle]:
    """Basis cycles plus elementary cycles of sums of two or three of them."""
    basis = cycle_basis(S)

    def edge_set(c: Cycle):
        return frozenset(frozenset((("x", x), ("y", y))) for x, y in c.paths())

    sets = [edge_set(c) for c in basis]
    seen: Dict[Tuple, Cycle] = {c.nodes: c for c in basis}
    for k in (2, 3):
        for combo in combinations(range(len(basis)), k):
            acc = frozenset()
            for i in combo:
                acc = acc ^ sets[i]
            if not acc:
                continue
            for c in _split_eulerian([tuple(e) for e in acc]):
                if c.is_valid_in(S):
                    seen.setdefault(c.nodes, c)
    return sorted(seen.values(), key=lambda c: (len(c.nodes), c.nodes))


POOL_BUDGET = 10_000


def find_free_pool(S: Support, budget: int = POOL_BUDGET) -> Optional[CyclePool]:
    """First free pool (n cycles on exactly n x-points) in canonical order.

    ``None`` only means the bounded search found nothing.
    """
    cands = candidate_cycles(S)
    tried = 0
    for n in range(2, min(len(cands), len(S.x_points)) + 1):
        for combo in combinations(cands, n):
            tried += 1
            if tried > budget:
                return None
            pool = CyclePool(tuple(combo))
            if len(pool.x_points) != n or not pool.is_free():
                continue
            try:
                _pool_alpha(pool)
            except DegeneratePoolError:
                continue
            return pool
    return None


def _pool_alpha(pool: CyclePool) -> Tuple[List[Fraction], Dict[Path, Fraction]]:
    xs = pool.x_points
    gamma = pool.gamma
    n = len(pool.cycles)
    # the equation at the largest x follows from the others (rows of gamma sum to 0)
    rows = [[gamma[i][j] for i in range(n)] for j in range(len(xs) - 1)]
    basis = linalg.nullspace(rows, ncols=n) if rows else linalg.nullspace([], ncols=n)
    for alpha in basis:
        if any(sum(alpha[i] * gamma[i][j] for i in range(n)) != 0 for j in range(len(xs))):
            raise AssertionError("dropped martingale equation is not implied")  # pragma: no cover
        delta: Dict[Path, Fraction] = {}
        for a, c in zip(alpha, pool.cycles):
            for p, s in c.perturbation().items():
                delta[p] = delta.get(p, Fraction(0)) + a * s
        delta = {p: v for p, v in delta.items() if v}
        if delta:
            return alpha, delta
    raise DegeneratePoolError("degenerate-pool: every admissible alpha gives the zero perturbation")


@dataclass(frozen=True)
class PerturbationPair:
    q1: MartingaleCoupling
    q2: MartingaleCoupling
    direction: Dict[Path, Fraction]
    scale: Fraction
    alpha: Tuple[Fraction, ...] = ()

    def check(self, Q: MartingaleCoupling) -> bool:
        paths = set(Q.weights) | set(self.q1.weights) | set(self.q2.weights)
        midpoint = all(self.q1.weight(*p) + self.q2.weight(*p) == 2 * Q.weight(*p) for p in paths)
        return (
            midpoint
            and self.q1.weights != self.q2.weights
            and validate_coupling(self.q1).ok
            and validate_coupling(self.q2).ok
        )


def default_scale(Q: MartingaleCoupling, delta: Dict[Path, Fraction]) -> Fraction:
    return min(Q.weight(*p) / abs(v) for p, v in delta.items()) / 2


def perturb_along(Q: MartingaleCoupling, delta: Dict[Path, Fraction], scale=None, alpha=()) -> PerturbationPair:
    """``Q +/- scale * delta`` after checking that delta preserves every constraint."""
    if not delta or all(v == 0 for v in delta.values()):
        raise DegeneratePoolError("zero perturbation")
    if not set(delta) <= set(Q.weights):
        raise ValueError("perturbation leaves the support of Q")
    if not preserves_constraints(Q.support, delta):
        raise ValueError("perturbation does not preserve marginals and martingale property")
    s = default_scale(Q, delta) if scale is None else Fraction(scale)
    if s <= 0:
        raise ValueError("scale must be strictly positive")
    w1 = dict(Q.weights)
    w2 = dict(Q.weights)
    for p, v in delta.items():
        w1[p] += s * v
        w2[p] -= s * v
    if min(w1.values()) <= 0 or min(w2.values()) <= 0:
        raise ValueError(f"scale {s} too large: a perturbed weight is not positive")
    pair = PerturbationPair(
        MartingaleCoupling(w1, Q.mu, Q.nu), MartingaleCoupling(w2, Q.mu, Q.nu), dict(delta), s, tuple(alpha)
    )
    if not pair.check(Q):
        raise AssertionError("perturbation pair failed re-validation")  # pragma: no cover
    return pair


def build_pool_perturbation(Q: MartingaleCoupling, pool: CyclePool, scale=None) -> PerturbationPair:
    """Combine the pool's cycles with weights solving the reduced gamma system."""
    if scale is not None and Fraction(scale) == 0:
        raise ValueError("scale must be nonzero")
    if not validate_coupling(Q).ok:
        raise InvalidCouplingError("invalid-coupling")
    if not pool.is_valid_in(Q.support):
        raise ValueError("pool is not a valid free pool in supp(Q)")
    alpha, delta = _pool_alpha(pool)
    return perturb_along(Q, delta, scale, alpha)
