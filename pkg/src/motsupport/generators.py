"""Instance constructors: binomial trees, trinomial patterns, LP vertices,
curtain-pattern checkers and random convex-ordered marginals."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from .measure import DiscreteMeasure, check_convex_order
from .rational import parse_rational
from .simplex import InfeasibleError, simplex
from .support import MartingaleCoupling, Path, Support, validate_coupling


class GeneratorError(ValueError):
    pass


# ------------------------------------------------------------------ binomial


def gen_binomial(mu: DiscreteMeasure, spreads: Mapping) -> MartingaleCoupling:
    """Two-point kernel ``{d, u}`` at every atom, with ``q_u = (x - d) / (u - d)``."""
    weights: Dict[Path, Fraction] = {}
    for x, m in mu.atoms:
        try:
            d, u = spreads[x]
        except KeyError:
            raise GeneratorError(f"no spread for atom {x}") from None
        d, u = parse_rational(d), parse_rational(u)
        if not d < x < u:
            raise GeneratorError(f"spread-violation: need {d} < {x} < {u}")
        qu = (x - d) / (u - d)
        weights[(x, d)] = weights.get((x, d), Fraction(0)) + m * (1 - qu)
        weights[(x, u)] = weights.get((x, u), Fraction(0)) + m * qu
    nu_mass: Dict[Fraction, Fraction] = {}
    for (_, y), w in weights.items():
        nu_mass[y] = nu_mass.get(y, Fraction(0)) + w
    return MartingaleCoupling(weights, mu, DiscreteMeasure.from_pairs(nu_mass.items()))


# ------------------------------------------------------------ trinomial


@dataclass(frozen=True)
class HKParams:
    """Trinomial support pattern.

    ``inner`` atoms lie in ``[a, b]`` and map to ``{p(x), q(x)}``, plus ``x``
    itself when listed in ``stay``; ``outer`` atoms lie outside ``[a, b]``
    and map to themselves. ``p`` and ``q`` are strictly decreasing, with
    ``p < a`` and ``q > b``.
    """

    a: Fraction
    b: Fraction
    inner: Tuple[Fraction, ...]
    p: Mapping
    q: Mapping
    stay: frozenset = frozenset()
    outer: Tuple[Fraction, ...] = ()


def gen_hk_trinomial(params: HKParams) -> Support:
    a, b = Fraction(params.a), Fraction(params.b)
    if not 0 < a < b:
        raise GeneratorError("need 0 < a < b")
    inner = sorted(Fraction(x) for x in params.inner)
    p = {Fraction(k): Fraction(v) for k, v in params.p.items()}
    q = {Fraction(k): Fraction(v) for k, v in params.q.items()}
    stay = {Fraction(x) for x in params.stay}
    paths = set()
    for x in params.outer:
        x = Fraction(x)
        if a <= x <= b or x <= 0:
            raise GeneratorError(f"outer atom {x} must lie outside [a, b]")
        paths.add((x, x))
    for x in inner:
        if not a <= x <= b:
            raise GeneratorError(f"inner atom {x} outside [a, b]")
        if not 0 < p[x] < a or not q[x] > b:
            raise GeneratorError(f"need 0 < p(x) < a and q(x) > b at {x}")
        paths.update({(x, p[x]), (x, q[x])})
        if x in stay:
            paths.add((x, x))
    for lo, hi in zip(inner, inner[1:]):
        if not (p[lo] > p[hi] and q[lo] > q[hi]):
            raise GeneratorError("monotonicity-violation: p and q must be strictly decreasing")
    return Support(frozenset(paths))


# --------------------------------------------------------------- LP vertex


@dataclass(frozen=True)
class CostFunction:
    name: str
    evaluator: Callable[[Fraction, Fraction], Fraction] = field(compare=False)

    def __call__(self, x, y) -> Fraction:
        return Fraction(self.evaluator(Fraction(x), Fraction(y)))


COST_PRESETS: Dict[str, CostFunction] = {
    "pow1": CostFunction("pow1", lambda x, y: y - x),
    "pow2": CostFunction("pow2", lambda x, y: (y - x) ** 2),
    "pow3": CostFunction("pow3", lambda x, y: (y - x) ** 3),
    "abs": CostFunction("abs", lambda x, y: abs(y - x)),
    "neg-abs": CostFunction("neg-abs", lambda x, y: -abs(y - x)),
}


def cost_from_table(table: Mapping) -> CostFunction:
    tab = {(parse_rational(x), parse_rational(y)): parse_rational(v) for (x, y), v in table.items()}
    return CostFunction("custom", lambda x, y: tab[(x, y)])


def get_cost(name: str) -> CostFunction:
    try:
        return COST_PRESETS[name]
    except KeyError:
        raise GeneratorError(f"unknown cost preset {name!r}; choose from {sorted(COST_PRESETS)}") from None


@dataclass(frozen=True)
class LpSolution:
    coupling: MartingaleCoupling
    objective: Fraction
    basis_info: frozenset


def solve_mot_lp(mu: DiscreteMeasure, nu: DiscreteMeasure, cost: CostFunction, sense: str = "min") -> LpSolution:
    """Optimal vertex of M(mu, nu) for ``cost`` by exact simplex."""
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    if not check_convex_order(mu, nu):
        raise InfeasibleError("marginals are not in convex order")
    cells = [(x, y) for x in mu.points for y in nu.points]
    A, b = [], []
    for x, m in mu.atoms:
        A.append([Fraction(int(cx == x)) for cx, _ in cells])
        b.append(m)
    for y, m in nu.atoms:
        A.append([Fraction(int(cy == y)) for _, cy in cells])
        b.append(m)
    for x, _ in mu.atoms:
        A.append([(cy - cx) if cx == x else Fraction(0) for cx, cy in cells])
        b.append(Fraction(0))
    sign = 1 if sense == "min" else -1
    c = [sign * cost(x, y) for x, y in cells]
    res = simplex(A, b, c)
    weights = {cell: v for cell, v in zip(cells, res.x) if v != 0}
    Q = MartingaleCoupling(weights, mu, nu)
    if not validate_coupling(Q).ok:
        raise AssertionError("simplex returned an infeasible point")  # pragma: no cover
    objective = sum((cost(x, y) * w for (x, y), w in weights.items()), Fraction(0))
    basic = frozenset(cells[j] for j in res.basis if j < len(cells))
    return LpSolution(Q, objective, basic)


# ------------------------------------------------------ curtain patterns


@dataclass(frozen=True)
class MonotoneResult:
    monotone: bool
    violation: Optional[Tuple[Fraction, Fraction, Fraction, Fraction, Fraction]] = None

    def __bool__(self):
        return self.monotone


def _scan(S: Support, left: bool) -> MonotoneResult:
    for x in S.x_points:
        ys = S.ysec(x)
        for xp in S.x_points:
            if (xp <= x) if left else (xp >= x):
                continue
            for yp in S.ysec(xp):
                lo = [y for y in ys if y < yp]
                hi = [y for y in ys if y > yp]
                if lo and hi:
                    return MonotoneResult(False, (x, lo[-1], hi[0], xp, yp))
    return MonotoneResult(True)


def check_left_monotone(S: Support) -> MonotoneResult:
    """No ``(x, y-), (x, y+), (x', y')`` in S with ``x < x'`` and ``y- < y' < y+``."""
    return _scan(S, left=True)


def check_right_monotone(S: Support) -> MonotoneResult:
    """Mirror of the left pattern with ``x > x'``."""
    return _scan(S, left=False)


# ------------------------------------------------------------------ random


def gen_random_instance(seed: int, n_mu: int, n_nu: int) -> Tuple[DiscreteMeasure, DiscreteMeasure]:
    """Random ``(mu, nu)`` in convex order.

    nu gets ``n_nu`` atoms; they are split into ``n_mu`` groups and mu puts
    each group's mass at the group barycenter.
    """
    if not 1 <= n_mu <= n_nu <= 12:
        raise GeneratorError("need 1 <= n_mu <= n_nu <= 12")
    rng = random.Random(seed)
    points = sorted(Fraction(k, 4) for k in rng.sample(range(1, 16 * n_nu + 1), n_nu))
    raw = [rng.randint(1, 9) for _ in range(n_nu)]
    masses = [Fraction(r, sum(raw)) for r in raw]
    nu = DiscreteMeasure(tuple(zip(points, masses)))
    while True:
        idx = list(range(n_nu))
        rng.shuffle(idx)
        labels = [0] * n_nu
        for g, i in enumerate(idx):
            labels[i] = g if g < n_mu else rng.randrange(n_mu)
        groups: Dict[int, List[int]] = {}
        for i, g in enumerate(labels):
            groups.setdefault(g, []).append(i)
        atoms = []
        for members in groups.values():
            m = sum(masses[i] for i in members)
            atoms.append((sum(points[i] * masses[i] for i in members) / m, m))
        if len({p for p, _ in atoms}) == n_mu:
            mu = DiscreteMeasure(tuple(sorted(atoms)))
            return mu, nu


@dataclass(frozen=True)
class TrinomialDiagnostic:
    consistent: bool
    reason: Optional[str] = None

    def __bool__(self):
        return self.consistent


def trinomial_pattern(S: Support) -> TrinomialDiagnostic:
    """Does S look like the output of :func:`gen_hk_trinomial`?

    Every section is ``{x}`` or a subset of ``{p(x), x, q(x)}`` with
    ``p(x) < x < q(x)``, and ``p``, ``q`` are non-increasing over the moving atoms.
    """
    moving = []
    for x in S.x_points:
        ys = S.ysec(x)
        if ys == (x,):
            continue
        p, q = ys[0], ys[-1]
        if not p < x < q or set(ys) - {p, x, q}:
            return TrinomialDiagnostic(False, f"section at {x} is not of the form {{p, x, q}}")
        moving.append((x, p, q))
    for (x1, p1, q1), (x2, p2, q2) in zip(moving, moving[1:]):
        if p2 > p1 or q2 > q1:
            return TrinomialDiagnostic(False, f"p or q increases between {x1} and {x2}")
    return TrinomialDiagnostic(True)
