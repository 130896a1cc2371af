import itertools

import pytest

from utils.abelian_group import GroupSpec
from utils.elliptic import (
    INFINITY, Curve, CurvePoint, build_curve, count_points, enumerate_points, group_structure_iso, hasse_audit,
    parse_curve, parse_point, parse_points, point_order, q_threshold_check,
)
from utils.errors import ConfigError


@pytest.mark.parametrize('p, a, b', [(13, 1, 3), (5, 0, 0), (4, 1, 1), (3, 1, 1), (7, 0, 0)])
def test_invalid_curves_are_rejected(p, a, b):
    with pytest.raises(ConfigError):
        Curve(p, a, b)


def test_coefficients_are_reduced():
    assert Curve(13, 14, -12) == Curve(13, 1, 1)
    assert build_curve(13, 40, 27) == Curve(13, 1, 1)


def test_parsing(curve13):
    assert parse_curve('p=13,a=1,b=1') == curve13
    assert parse_curve(' p = 13 , a = -12 , b = 1 ') == curve13
    assert parse_point(curve13, 'inf') == INFINITY
    assert parse_points(curve13, '(0,1); (0,12);inf') == [CurvePoint(0, 1), CurvePoint(0, 12), INFINITY]
    with pytest.raises(ConfigError):
        parse_curve('13,1,1')
    with pytest.raises(ConfigError):
        parse_point(curve13, '(0,2)')
    with pytest.raises(ConfigError):
        parse_point(curve13, '0,1')


def test_enumeration_matches_count(curve13):
    points = enumerate_points(curve13)
    assert len(points) == 18
    assert points[0] == INFINITY
    assert points[1:3] == [CurvePoint(0, 1), CurvePoint(0, 12)]
    assert CurvePoint(7, 0) in points
    assert all(curve13.contains(P) for P in points)
    assert count_points(curve13) == 18


def test_count_agrees_with_enumeration_over_small_primes():
    for p in (5, 7, 11, 17):
        for a, b in itertools.product(range(p), repeat=2):
            if (4 * a ** 3 + 27 * b ** 2) % p == 0:
                continue
            C = Curve(p, a, b)
            assert len(enumerate_points(C)) == count_points(C)


def test_enumeration_cap(monkeypatch, curve13):
    monkeypatch.setenv('SUMSETLAB_CURVE_CAP', '11')
    with pytest.raises(ConfigError):
        enumerate_points(curve13)


def test_group_law_axioms(curve13):
    points = enumerate_points(curve13)
    for P in points:
        assert curve13.add(P, INFINITY) == P
        assert curve13.add(P, curve13.neg(P)) == INFINITY
        assert curve13.mul(18, P) == INFINITY
        assert curve13.mul(-1, P) == curve13.neg(P)
    for P, Q, R in itertools.product(points[:8], repeat=3):
        assert curve13.add(P, Q) == curve13.add(Q, P)
        assert curve13.add(curve13.add(P, Q), R) == curve13.add(P, curve13.add(Q, R))


def test_off_curve_points_are_rejected(curve13):
    with pytest.raises(ConfigError):
        curve13.add(CurvePoint(0, 2), INFINITY)
    with pytest.raises(ConfigError):
        curve13.point(1, 1)


def test_point_order(curve13):
    assert point_order(curve13, INFINITY, 18) == 1
    assert point_order(curve13, CurvePoint(7, 0), 18) == 2


def test_structure_isomorphism(curve13):
    iso = group_structure_iso(curve13)
    assert iso.order == 18
    assert iso.abstract.order == 18
    assert iso.abstract.canonical_factors in ((18,), (3, 6))
    assert iso.fwd(INFINITY).index == 0
    G = iso.abstract
    for P in iso.points:
        assert iso.back(iso.fwd(P)) == P
        for m in range(-2, 20):
            assert iso.fwd(curve13.mul(m, P)).index == G.smul(m, iso.fwd(P).index)
    with pytest.raises(ConfigError):
        iso.fwd(CurvePoint(0, 2))


def test_non_cyclic_curve_group():
    # y^2 = x^3 - x over F_5 has full 2-torsion
    iso = group_structure_iso(Curve(5, -1, 0))
    assert iso.order == 8
    assert iso.abstract.rank == 2
    assert iso.abstract == GroupSpec((2, 4))


def test_hasse_audit_over_small_primes():
    audit = hasse_audit([5, 7, 11])
    assert audit.passed
    assert audit.curves == 20 + 42 + 110
    low, high = audit.extremes[11]
    assert (low - 12) ** 2 <= 44 and (high - 12) ** 2 <= 44
    with pytest.raises(ConfigError):
        hasse_audit([9])


def test_q_threshold_arithmetic():
    result = q_threshold_check()
    assert result.floor_sqrt == 217
    assert result.hasse_lower == 46656
    assert result.at_least_threshold
    assert result.meets_odd_threshold and result.meets_even_threshold
    with pytest.raises(ConfigError):
        q_threshold_check(47088)
