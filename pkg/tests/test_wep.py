import random
from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from motsupport.combinatorics import find_2link_ordering, is_fully_erasable
from motsupport.fixtures import binomial_mesh, free_cycle, shared_triple
from motsupport.support import Mesh, Support, intersection_screen
from motsupport.wep import (
    InfeasibilityCertificate,
    NotOneErasedError,
    TwoNet,
    WepDecomposition,
    check_saturated,
    grow_2nets,
    is_2net,
    is_affine_on,
    one_erased_core,
    replay_net_build,
    s_affine_space,
    verify_saturation_theorem,
    wep_decompose,
    wep_holds,
    wep_operator,
)

from conftest import kernel_supports, sec

X1, X2 = F(2), F(5, 2)


def test_affine_space_examples():
    assert s_affine_space(binomial_mesh()).dim == 2
    chain = sec({2: (1, 2, 3), 3: (2, 3, 5)})
    space = s_affine_space(chain)
    assert is_2net(chain) and space.dim == 2
    # the span is {1, y}: each basis vector is affine on all of S_Y
    assert all(is_affine_on(b, chain.y_points) for b in space.basis)
    assert s_affine_space(sec({2: (1, 3), 6: (5, 7)})).dim == 4


def test_affine_basis_is_affine_per_section():
    S = free_cycle()
    space = s_affine_space(S)
    for b in space.basis:
        for x in S.x_points:
            assert is_affine_on(b, S.ysec(x))
        for x, (phi, h) in space.slopes(S, b).items():
            assert all(phi + h * (y - x) == b[y] for y in S.ysec(x))


def test_is_2net_examples():
    assert is_2net(binomial_mesh())
    assert is_2net(sec({2: (1, 2, 3), F(5, 2): (2, 3)}))
    assert not is_2net(sec({2: (1, 3), 6: (5, 7)}))
    with pytest.raises(NotOneErasedError):
        is_2net(sec({2: (2,)}))
    with pytest.raises(NotOneErasedError):
        s_affine_space(sec({2: (2,)}))


def test_grow_2nets_chain_is_one_net():
    # binomial meshes chained through shared pairs merge into one net
    S = sec({2: (1, 3), F(5, 2): (1, 3), 3: (1, 3, 4), F(7, 2): (3, 4)})
    nets = grow_2nets(S)
    assert nets[0].paths == S
    assert is_2net(nets[0].paths)


def test_grow_2nets_separate_nets():
    S = sec({2: (1, 3), 4: (3, 5)})
    nets = grow_2nets(S)
    assert {n.paths for n in nets} == {sec({2: (1, 3)}), sec({4: (3, 5)})}
    a, b = nets
    assert len(set(a.y_points) & set(b.y_points)) <= 1


def test_grow_2nets_shared_triple_witness():
    S = shared_triple()
    nets = grow_2nets(S)
    for n in nets:
        assert is_2net(n.paths)
        assert replay_net_build(n.build) == n.paths
    witness = sec({X1: (1, 2, 3), X2: (1, 2)})
    found = [n for n in nets if n.paths == witness]
    assert found
    res = check_saturated(found[0], S)
    assert not res and res.missing == ((X2, F(3)),)


def test_check_saturated_examples():
    S = free_cycle()
    for x in S.x_points:
        assert check_saturated(Support(Mesh(x, S.ysec(x)).paths()), S)
    assert check_saturated(S, S)
    assert check_saturated(TwoNet(S), S)


def test_replay_rejects_bad_builds():
    with pytest.raises(AssertionError):
        replay_net_build(("mesh", Mesh(2, (1,))))
    with pytest.raises(AssertionError):
        replay_net_build(("merge", ("mesh", Mesh(2, (1, 3))), ("mesh", Mesh(4, (3, 5)))))


def test_wep_holds_examples():
    assert wep_holds(binomial_mesh())
    st3 = wep_holds(shared_triple())
    assert not st3 and st3.rank == 5
    fc = wep_holds(free_cycle())
    assert not fc and fc.rank < 10
    assert wep_holds(Support())


def test_cokernel_witness_has_no_decomposition():
    for S in (shared_triple(), free_cycle()):
        w = wep_holds(S).cokernel_witness
        res = wep_decompose(S, w)
        assert isinstance(res, InfeasibilityCertificate) and res.check(S, w)


def test_binomial_mesh_closed_form():
    S = sec({2: (1, 4)})
    f = {(F(2), F(1)): F(7), (F(2), F(4)): F(-3, 2)}
    d = wep_decompose(S, f)
    y1, y2, x = F(1), F(4), F(2)
    f1, f2 = f[(x, y1)], f[(x, y2)]
    assert d.psi == {y1: 0, y2: 0}
    assert d.h[x] == (f1 - f2) / (y1 - y2)
    assert d.phi[x] == ((x - y2) * f1 + (y1 - x) * f2) / (y1 - y2)
    assert d.replays(S, f)


def test_zero_payoff_gives_zero_triple():
    for S in (binomial_mesh(), sec({2: (1, 2, 3), 3: (2, 4, 5)}), free_cycle()):
        d = wep_decompose(S, {p: 0 for p in S})
        assert isinstance(d, WepDecomposition)
        assert all(v == 0 for m in (d.phi, d.h, d.psi) for v in m.values())


def test_missing_path_indicator_is_infeasible():
    S = shared_triple()
    f = {p: F(0) for p in S}
    f[(X2, F(3))] = F(1)
    res = wep_decompose(S, f)
    assert isinstance(res, InfeasibilityCertificate) and res.check(S, f)


def test_payoff_domain_mismatch():
    with pytest.raises(ValueError, match="payoff-domain-mismatch"):
        wep_decompose(binomial_mesh(), {})


def test_saturation_report_examples():
    chain = sec({2: (1, 2), 3: (2, 3)})
    rep = verify_saturation_theorem(chain)
    assert rep.wep and rep.all_saturated and not rep.violation
    rep = verify_saturation_theorem(shared_triple())
    assert not rep.wep and rep.non_saturated and not rep.search_incomplete
    rep = verify_saturation_theorem(Support())
    assert rep.wep and rep.all_saturated


def test_core_drops_single_point_sections():
    S = sec({2: (1, 3), 5: (5,)})
    assert one_erased_core(S) == sec({2: (1, 3)})


def _random_payoff(S, rng):
    return {p: F(rng.randint(-20, 20), rng.randint(1, 6)) for p in S}


@given(kernel_supports(), st.integers(0, 10**6))
def test_decomposition_round_trip(S, seed):
    rng = random.Random(seed)
    f = _random_payoff(S, rng)
    res = wep_decompose(S, f)
    if wep_holds(S):
        assert isinstance(res, WepDecomposition)
        assert all(r == 0 for r in res.residuals(S, f).values())
    elif isinstance(res, InfeasibilityCertificate):
        assert res.check(S, f)
    else:
        assert res.replays(S, f)


@given(kernel_supports(), st.integers(0, 10**6))
def test_gauge_freedom_on_nets(S, seed):
    # two decompositions of one payoff differ by an affine psi on each net
    S = one_erased_core(S)
    if not S or not wep_holds(S):
        return
    rng = random.Random(seed)
    f = _random_payoff(S, rng)
    d1 = wep_decompose(S, f)
    T, paths, cols = wep_operator(S)
    from motsupport import linalg
    sol, _ = linalg.solve(T, [f[p] for p in paths])
    psi2 = {pt: v for (kind, pt), v in zip(cols, sol) if kind == "psi"}
    diff = {y: d1.psi[y] - psi2[y] for y in S.y_points}
    for net in grow_2nets(S):
        if net.paths.x_points and len(net.paths.y_points) >= 3:
            assert is_affine_on(diff, net.paths.y_points)


@given(kernel_supports())
def test_wep_implications(S):
    wep = wep_holds(S).holds
    if find_2link_ordering(S) is not None:
        assert wep
    if is_fully_erasable(S):
        assert wep
    if wep:
        assert intersection_screen(S) == []
    core = one_erased_core(S)
    if core and len(core.y_points) <= 5:
        assert wep == is_fully_erasable(core)
    rep = verify_saturation_theorem(S)
    assert not rep.violation
    if wep:
        # extended intersection: no outside x meets a net in three points
        for net in grow_2nets(core):
            ax, ay = set(net.x_points), set(net.y_points)
            for z in core.x_points:
                if z not in ax:
                    assert len(ay.intersection(core.ysec(z))) <= 2
