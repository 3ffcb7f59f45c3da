"""Supports, meshes and martingale couplings."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from .measure import DiscreteMeasure
from .rational import parse_rational

Path = Tuple[Fraction, Fraction]


class SupportError(ValueError):
    pass


class UnknownPointError(SupportError, KeyError):
    pass


class CouplingError(ValueError):
    pass


@dataclass(frozen=True)
class Support:
    """A finite set of paths ``(x, y)`` in X x Y, referenced by value."""

    paths: FrozenSet[Path] = frozenset()

    def __post_init__(self):
        paths = self.paths
        if not isinstance(paths, frozenset) or not all(type(x) is Fraction and type(y) is Fraction for x, y in paths):
            paths = frozenset((Fraction(x), Fraction(y)) for x, y in paths)
        object.__setattr__(self, "paths", paths)

    @classmethod
    def from_pairs(cls, pairs: Iterable) -> "Support":
        return cls(frozenset((parse_rational(x), parse_rational(y)) for x, y in pairs))

    @classmethod
    def from_sections(cls, sections: Mapping) -> "Support":
        """Build from ``{x: iterable of y}``."""
        return cls.from_pairs((x, y) for x, ys in sections.items() for y in ys)

    @cached_property
    def x_points(self) -> Tuple[Fraction, ...]:
        return tuple(sorted({x for x, _ in self.paths}))

    @cached_property
    def y_points(self) -> Tuple[Fraction, ...]:
        return tuple(sorted({y for _, y in self.paths}))

    @cached_property
    def _ysec(self) -> Dict[Fraction, Tuple[Fraction, ...]]:
        out: Dict[Fraction, list] = {}
        for x, y in self.paths:
            out.setdefault(x, []).append(y)
        return {x: tuple(sorted(ys)) for x, ys in out.items()}

    @cached_property
    def _xsec(self) -> Dict[Fraction, Tuple[Fraction, ...]]:
        out: Dict[Fraction, list] = {}
        for x, y in self.paths:
            out.setdefault(y, []).append(x)
        return {y: tuple(sorted(xs)) for y, xs in out.items()}

    @cached_property
    def sorted_paths(self) -> Tuple[Path, ...]:
        return tuple(sorted(self.paths))

    def ysec(self, x) -> Tuple[Fraction, ...]:
        """Sorted Y-section; empty tuple when ``x`` is not in S_X."""
        return self._ysec.get(Fraction(x), ())

    def xsec(self, y) -> Tuple[Fraction, ...]:
        return self._xsec.get(Fraction(y), ())

    def restrict(self, paths: Iterable[Path]) -> "Support":
        return Support(frozenset(paths) & self.paths)

    def __len__(self):
        return len(self.paths)

    def __iter__(self):
        return iter(self.sorted_paths)

    def __contains__(self, path):
        x, y = path
        return (Fraction(x), Fraction(y)) in self.paths

    def __le__(self, other: "Support"):
        return self.paths <= other.paths

    def __or__(self, other: "Support") -> "Support":
        return Support(self.paths | other.paths)

    def __sub__(self, other: "Support") -> "Support":
        return Support(self.paths - other.paths)

    def __bool__(self):
        return bool(self.paths)


@dataclass(frozen=True)
class Mesh:
    """``{x} x ys``; a 2-mesh has exactly two y-points."""

    x: Fraction
    ys: FrozenSet[Fraction]

    def __post_init__(self):
        object.__setattr__(self, "x", Fraction(self.x))
        object.__setattr__(self, "ys", frozenset(Fraction(y) for y in self.ys))
        if not self.ys:
            raise SupportError("mesh needs at least one y")

    @property
    def is_binomial(self) -> bool:
        return len(self.ys) == 2

    def paths(self) -> FrozenSet[Path]:
        return frozenset((self.x, y) for y in self.ys)


def y_section(S: Support, x) -> FrozenSet[Fraction]:
    ys = S.ysec(x)
    if not ys:
        raise UnknownPointError(f"unknown-x: {x} is not in S_X")
    return frozenset(ys)


def x_section(S: Support, y) -> FrozenSet[Fraction]:
    xs = S.xsec(y)
    if not xs:
        raise UnknownPointError(f"unknown-y: {y} is not in S_Y")
    return frozenset(xs)


def full_mesh(S: Support, x) -> Mesh:
    return Mesh(x, y_section(S, x))


@dataclass(frozen=True)
class MartingaleCoupling:
    """Strictly positive weights on a support, together with both marginals.

    Marginal and martingale constraints are *not* enforced here; use
    :func:`validate_coupling`, which reports violations as data.
    """

    weights: Mapping[Path, Fraction]
    mu: DiscreteMeasure
    nu: DiscreteMeasure

    def __post_init__(self):
        w = {}
        for (x, y), v in dict(self.weights).items():
            v = Fraction(v)
            if v <= 0:
                raise CouplingError(f"weight {v} at {(x, y)} is not strictly positive")
            w[(Fraction(x), Fraction(y))] = v
        object.__setattr__(self, "weights", dict(sorted(w.items())))

    @cached_property
    def support(self) -> Support:
        return Support(frozenset(self.weights))

    def weight(self, x, y) -> Fraction:
        return self.weights.get((Fraction(x), Fraction(y)), Fraction(0))

    def kernel(self, x) -> Dict[Fraction, Fraction]:
        x = Fraction(x)
        row = {y: w for (xx, y), w in self.weights.items() if xx == x}
        total = sum(row.values())
        return {y: w / total for y, w in row.items()}


@dataclass(frozen=True)
class Violation:
    kind: str  # mu-marginal | nu-marginal | martingale | foreign-point
    location: Fraction
    lhs: Fraction
    rhs: Fraction


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: Tuple[Violation, ...] = ()

    def __bool__(self):
        return self.ok


def validate_coupling(Q: MartingaleCoupling) -> ValidationReport:
    """Check marginals and the martingale kernel condition exactly.

    Martingale violations compare the kernel barycenter ``sum_y y q(x, y)``
    with ``x``.
    """
    violations: List[Violation] = []
    rows: Dict[Fraction, Fraction] = {}
    firsts: Dict[Fraction, Fraction] = {}
    cols: Dict[Fraction, Fraction] = {}
    for (x, y), w in Q.weights.items():
        rows[x] = rows.get(x, Fraction(0)) + w
        firsts[x] = firsts.get(x, Fraction(0)) + y * w
        cols[y] = cols.get(y, Fraction(0)) + w

    mu_points = set(Q.mu.points)
    nu_points = set(Q.nu.points)
    for x in sorted(set(rows) - mu_points):
        violations.append(Violation("foreign-point", x, rows[x], Fraction(0)))
    for y in sorted(set(cols) - nu_points):
        violations.append(Violation("foreign-point", y, cols[y], Fraction(0)))
    for x, m in Q.mu.atoms:
        got = rows.get(x, Fraction(0))
        if got != m:
            violations.append(Violation("mu-marginal", x, got, m))
    for y, m in Q.nu.atoms:
        got = cols.get(y, Fraction(0))
        if got != m:
            violations.append(Violation("nu-marginal", y, got, m))
    for x in sorted(rows):
        bary = firsts[x] / rows[x]
        if bary != x:
            violations.append(Violation("martingale", x, bary, x))
    return ValidationReport(not violations, tuple(violations))


def connected_subclasses(S: Support) -> List[Support]:
    """Partition S under the closure of "shares x or shares y"."""
    parent: Dict = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    for x, y in S.paths:
        parent.setdefault(("x", x), ("x", x))
        parent.setdefault(("y", y), ("y", y))
        union(("x", x), ("y", y))
    groups: Dict = {}
    for path in S.sorted_paths:
        groups.setdefault(find(("x", path[0])), []).append(path)
    classes = [Support(frozenset(g)) for g in groups.values()]
    classes.sort(key=lambda c: c.sorted_paths[0])
    return classes


def is_connected(S: Support) -> bool:
    return len(connected_subclasses(S)) <= 1


def intersection_screen(S: Support) -> List[Tuple[Fraction, Fraction, Tuple[Fraction, ...]]]:
    """Pairs ``x1 < x2`` whose Y-sections share three or more points."""
    out = []
    for x1, x2 in combinations(S.x_points, 2):
        shared = sorted(set(S.ysec(x1)) & set(S.ysec(x2)))
        if len(shared) >= 3:
            out.append((x1, x2, tuple(shared)))
    return out


def admits_martingale_kernel(S: Support) -> bool:
    """True when each section can carry a strictly positive kernel with barycenter x."""
    for x in S.x_points:
        ys = S.ysec(x)
        if len(ys) == 1:
            if ys[0] != x:
                return False
        elif not ys[0] < x < ys[-1]:
            return False
    return True


def positive_kernel(x: Fraction, ys: Tuple[Fraction, ...]) -> Dict[Fraction, Fraction]:
    """A strictly positive probability on ``ys`` with barycenter ``x``.

    Uniform weights are tilted toward the far endpoint just enough to move
    the barycenter onto ``x``; every weight stays positive.
    """
    x = Fraction(x)
    ys = tuple(sorted(Fraction(y) for y in ys))
    if len(ys) == 1:
        if ys[0] != x:
            raise CouplingError(f"single-point section {ys[0]} cannot have barycenter {x}")
        return {ys[0]: Fraction(1)}
    if not ys[0] < x < ys[-1]:
        raise CouplingError(f"{x} is not strictly inside [{ys[0]}, {ys[-1]}]")
    k = len(ys)
    m = sum(ys) / k
    w = {y: Fraction(1, k) for y in ys}
    if m == x:
        return w
    far = ys[-1] if m < x else ys[0]
    t = (x - m) / (far - m)
    w = {y: (1 - t) * v for y, v in w.items()}
    w[far] += t
    return w


def make_positive_coupling(S: Support, mu_masses: Optional[Mapping] = None) -> MartingaleCoupling:
    """Strictly positive martingale coupling with support exactly S.

    ``mu_masses`` defaults to uniform over S_X; nu is induced.
    """
    if not S:
        raise CouplingError("empty support")
    xs = S.x_points
    if mu_masses is None:
        mu_masses = {x: Fraction(1, len(xs)) for x in xs}
    mu = DiscreteMeasure.from_pairs((x, mu_masses[x]) for x in xs)
    weights = {}
    for x in xs:
        for y, q in positive_kernel(x, S.ysec(x)).items():
            weights[(x, y)] = mu.mass_at(x) * q
    nu_mass: Dict[Fraction, Fraction] = {}
    for (_, y), w in weights.items():
        nu_mass[y] = nu_mass.get(y, Fraction(0)) + w
    nu = DiscreteMeasure.from_pairs(nu_mass.items())
    return MartingaleCoupling(weights, mu, nu)
