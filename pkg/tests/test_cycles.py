from fractions import Fraction as F

import pytest
from hypothesis import given

from motsupport import linalg
from motsupport.cycles import (
    POOL_BUDGET,
    Cycle,
    CyclePool,
    DegeneratePoolError,
    InvalidCouplingError,
    MeshCycle,
    build_pool_perturbation,
    candidate_cycles,
    cycle_basis,
    cycle_rank,
    extremality_kernel,
    find_free_pool,
    find_mesh_cycles,
    perturb_along,
    preserves_constraints,
)
from motsupport.fixtures import free_cycle, free_cycle_pool, positive, shared_triple
from motsupport.generators import gen_binomial
from motsupport.measure import DiscreteMeasure
from motsupport.support import MartingaleCoupling, Mesh, make_positive_coupling
from motsupport.wep import wep_holds

from conftest import kernel_supports, sec

X1, X2 = F(2), F(5, 2)
Y1, Y2, Y3 = F(1), F(2), F(3)


def unique_binomial():
    mu = DiscreteMeasure.dirac(1)
    return gen_binomial(mu, {F(1): (F(1, 2), F(3, 2))})


def tree():
    mu = DiscreteMeasure.from_pairs([(2, F(1, 2)), (5, F(1, 2))])
    return gen_binomial(mu, {F(2): (1, 3), F(5): (4, 6)})


def test_extremality_examples():
    res = extremality_kernel(unique_binomial())
    assert res.extremal and res.kernel_basis == ()
    assert not extremality_kernel(positive(free_cycle()))


def test_shared_triple_kernel_pattern():
    res = extremality_kernel(positive(shared_triple()))
    assert not res and len(res.kernel_basis) == 1
    v = res.kernel_basis[0]
    # normalise so the x1 row reads (alpha, -beta, gamma)
    alpha, beta, gamma = v[(X1, Y1)], -v[(X1, Y2)], v[(X1, Y3)]
    assert alpha == beta - gamma
    assert beta * (Y1 - Y2) == gamma * (Y1 - Y3)
    assert alpha != 0
    # the x2 row carries the opposite perturbation
    assert all(v[(X2, y)] == -v[(X1, y)] for y in (Y1, Y2, Y3))


def test_extremality_rejects_invalid():
    Q = MartingaleCoupling(
        {(F(1), F(1, 2)): F(3, 4), (F(1), F(3, 2)): F(1, 4)},
        DiscreteMeasure.dirac(1),
        DiscreteMeasure.from_pairs([(F(1, 2), F(1, 2)), (F(3, 2), F(1, 2))]),
    )
    with pytest.raises(InvalidCouplingError):
        extremality_kernel(Q)


def test_cycle_basis_examples():
    assert cycle_basis(tree().support) == []
    square = sec({2: (1, 3), F(5, 2): (1, 3)})
    (c,) = cycle_basis(square)
    assert c.is_valid_in(square) and len(c.nodes) == 4
    assert len(cycle_basis(free_cycle())) == 3 == cycle_rank(free_cycle())


def test_cycle_canonical_and_gamma():
    c = Cycle.canonical((4, 5, 6, 6))
    assert c.nodes == (4, 5, 6, 6)
    c = Cycle.canonical((6, 6, 4, 5))
    assert c.nodes[0] == 4 and c.nodes[1] <= c.nodes[-1]
    # gamma sums to zero along any cycle
    for cyc in free_cycle_pool().cycles:
        assert sum(cyc.gamma(x) for x in cyc.x_points) == 0


def test_cycle_perturbation_preserves_marginals_only():
    S = free_cycle()
    for c in cycle_basis(S):
        v = c.perturbation()
        xs = {x for x, _ in v}
        for x in xs:
            assert sum(w for (a, _), w in v.items() if a == x) == 0
        ys = {y for _, y in v}
        for y in ys:
            assert sum(w for (_, b), w in v.items() if b == y) == 0


def test_cycle_validity_rules():
    S = free_cycle()
    assert not Cycle((F(6), F(6))).is_valid_in(S)
    assert not Cycle((F(6), F(6), F(6), F(5))).is_valid_in(S)   # repeated x
    assert not Cycle((F(6), F(1), F(4), F(2))).is_valid_in(S)   # (6, 1) not a path


def test_mesh_cycle_examples():
    mcs = find_mesh_cycles(shared_triple())
    expected = MeshCycle((Mesh(X1, (Y1, Y2)), Mesh(X2, (Y1, Y2)), Mesh(X2, (Y2, Y3)), Mesh(X1, (Y2, Y3))))
    assert expected.is_valid_in(shared_triple())
    assert any({m for m in mc.meshes} == set(expected.meshes) for mc in mcs)
    assert all(mc.is_valid_in(shared_triple()) for mc in mcs)
    assert find_mesh_cycles(free_cycle()) == []
    assert find_mesh_cycles(tree().support) == []


def test_mesh_cycle_perturbation_split():
    S = shared_triple()
    mc = MeshCycle((Mesh(X1, (Y1, Y2)), Mesh(X2, (Y1, Y2)), Mesh(X2, (Y2, Y3)), Mesh(X1, (Y2, Y3))))
    v = mc.perturbation()
    assert preserves_constraints(S, v)
    # per-mesh split p = -y'/(y - y') with alternating signs across the cycle
    p = -Y2 / (Y1 - Y2)
    assert v[(X1, Y1)] == p and v[(X2, Y1)] == -p
    pair = perturb_along(positive(S), v)
    assert pair.check(positive(S))


def test_listed_pool_is_valid():
    S = free_cycle()
    pool = free_cycle_pool()
    assert pool.is_valid_in(S) and pool.is_free()
    assert len(pool.x_points) == 3
    assert all(sum(row) == 0 for row in pool.gamma)


def test_find_free_pool_examples():
    S = free_cycle()
    pool = find_free_pool(S)
    assert pool is not None and pool.is_valid_in(S) and len(pool.cycles) == 3
    assert find_free_pool(tree().support) is None


def test_mesh_cycle_pool():
    S = shared_triple()
    for mc in find_mesh_cycles(S):
        pool = CyclePool(tuple(mc.pool()))
        assert pool.is_valid_in(S)
        assert all(len(c.nodes) == 4 for c in pool.cycles)
        assert build_pool_perturbation(positive(S), pool).check(positive(S))


def test_pool_perturbation_free_cycle():
    S = free_cycle()
    Q = positive(S)
    pool = free_cycle_pool()
    # one dependent x-equation dropped: a 2 x 3 system with a 1-dim solution space
    g = pool.gamma
    reduced = [[g[i][j] for i in range(3)] for j in range(2)]
    assert len(linalg.nullspace(reduced, ncols=3)) == 1
    pair = build_pool_perturbation(Q, pool)
    assert pair.check(Q)
    assert any(v != 0 for v in pair.direction.values())
    assert preserves_constraints(S, pair.direction)
    with pytest.raises(ValueError):
        build_pool_perturbation(Q, pool, scale=0)


def test_perturb_scale_guard():
    Q = positive(shared_triple())
    v = extremality_kernel(Q).kernel_basis[0]
    with pytest.raises(ValueError):
        perturb_along(Q, v, scale=10**6)
    with pytest.raises(DegeneratePoolError):
        perturb_along(Q, {})


def test_budget_is_respected():
    assert POOL_BUDGET == 10_000
    assert find_free_pool(free_cycle(), budget=0) is None


@given(kernel_supports(max_x=4))
def test_oracle_agreement_and_obstructions(S):
    Q = make_positive_coupling(S)
    ext = extremality_kernel(Q)
    assert ext.extremal == wep_holds(S).holds
    for v in ext.kernel_basis:
        assert preserves_constraints(S, v)
    if find_mesh_cycles(S):
        assert not ext.extremal
    pool = find_free_pool(S, budget=500)
    if pool is not None:
        assert not ext.extremal
        assert build_pool_perturbation(Q, pool).check(Q)


@given(kernel_supports())
def test_candidates_are_valid_cycles(S):
    for c in candidate_cycles(S):
        assert c.is_valid_in(S)
        assert Cycle.canonical(c.nodes) == c
