from fractions import Fraction as F
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from motsupport.measure import DiscreteMeasure, MeasureError, call_price, check_convex_order, mean
from motsupport.rational import RationalParseError, format_rational, parse_rational

from conftest import measures

D1 = DiscreteMeasure.dirac(1)
SPLIT = DiscreteMeasure.from_pairs([(F(1, 2), F(1, 2)), (F(3, 2), F(1, 2))])


@pytest.mark.parametrize("text, value", [
    ("1/2", F(1, 2)), ("0.1", F(1, 10)), ("-3", F(-3)), ("2/4", F(1, 2)), ("1e-2", F(1, 100)), (" 7/3 ", F(7, 3)),
])
def test_parse_rational(text, value):
    assert parse_rational(text) == value


@pytest.mark.parametrize("bad", ["1/0", "abc", "", "1/2/3", None, float("nan")])
def test_parse_rational_rejects(bad):
    with pytest.raises(RationalParseError):
        parse_rational(bad)


def test_lowest_terms_and_format():
    r = parse_rational("-6/4")
    assert (r.numerator, r.denominator) == (-3, 2)
    assert format_rational(r) == "-3/2" and format_rational(F(4)) == "4"


def test_mean_examples():
    assert mean(D1) == 1
    assert mean(SPLIT) == 1
    assert mean(DiscreteMeasure.from_pairs([(1, F(1, 3)), (4, F(2, 3))])) == 3


def test_call_price_examples():
    assert call_price(D1, 1) == 0
    assert call_price(SPLIT, 1) == F(1, 4)
    assert call_price(D1, 0) == 1


def test_convex_order_examples():
    assert check_convex_order(D1, SPLIT)
    assert check_convex_order(SPLIT, SPLIT)
    res = check_convex_order(SPLIT, D1)
    assert not res and res.witness == 1


def test_mean_mismatch_witness():
    res = check_convex_order(D1, DiscreteMeasure.dirac(2))
    assert not res and res.witness == "mean-mismatch"


@pytest.mark.parametrize("atoms", [
    [(1, F(1, 2)), (2, F(1, 3))],          # total mass 5/6
    [(1, F(1, 2)), (0, F(1, 2))],          # point at 0
    [(1, F(1, 2)), (-1, F(1, 2))],         # negative point
    [(1, F(0)), (2, F(1))],                # zero mass
])
def test_measure_invariants(atoms):
    with pytest.raises(MeasureError):
        DiscreteMeasure.from_pairs(atoms)


def test_from_pairs_canonicalizes():
    m = DiscreteMeasure.from_pairs([(2, F(1, 4)), (1, F(1, 4)), (2, F(1, 2))])
    assert m.atoms == ((F(1), F(1, 4)), (F(2), F(3, 4)))


def test_raw_atoms_must_be_sorted():
    with pytest.raises(MeasureError):
        DiscreteMeasure(((F(2), F(1, 2)), (F(1), F(1, 2))))


@given(measures(), st.lists(st.integers(0, 30), min_size=3, max_size=3, unique=True))
def test_call_price_convex_nonincreasing(m, ks):
    k1, k2, k3 = sorted(F(k, 4) for k in ks)
    c1, c2, c3 = (call_price(m, k) for k in (k1, k2, k3))
    assert c1 >= c2 >= c3
    # convexity: the middle value lies below the chord
    assert c2 * (k3 - k1) <= c1 * (k3 - k2) + c3 * (k2 - k1)


SMALL = [
    DiscreteMeasure.from_pairs(zip(pts, ws))
    for pts, ws in [
        ((2,), (1,)),
        ((1, 3), (F(1, 2), F(1, 2))),
        ((1, 2, 3), (F(1, 4), F(1, 2), F(1, 4))),
        ((1, 4), (F(2, 3), F(1, 3))),
        ((1, 2, 4), (F(1, 3), F(1, 3), F(1, 3))),
        ((F(1, 2), 3), (F(2, 5), F(3, 5))),
        ((1, 5), (F(3, 4), F(1, 4))),
        ((F(3, 2), F(5, 2)), (F(1, 2), F(1, 2))),
    ]
]


def test_antisymmetry_enumerated():
    for a, b in product(SMALL, SMALL):
        if check_convex_order(a, b) and check_convex_order(b, a):
            assert a == b


def test_transitivity_enumerated():
    for a, b, c in product(SMALL, repeat=3):
        if check_convex_order(a, b) and check_convex_order(b, c):
            assert check_convex_order(a, c)


@given(measures(), measures())
def test_convex_order_matches_dense_strike_scan(a, b):
    # an independent scan over a fine strike grid gives the same verdict
    grid = [F(k, 8) for k in range(0, 8 * 13)]
    dense = mean(a) == mean(b) and all(call_price(a, k) <= call_price(b, k) for k in grid)
    assert bool(check_convex_order(a, b)) == dense
