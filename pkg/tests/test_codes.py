import numpy as np
import pytest
from sympy import primerange

from utils.codes import (
    DivisorSpec, build_code, curve_iso, curves_over, divisor_point, dual_verdict, hr_general_bound, is_mds_rank,
    is_mds_sumset, mds_search, min_distance_oracle, random_instance, riemann_roch_basis, search_curve,
)
from utils.elliptic import INFINITY, Curve, CurvePoint, enumerate_points, parse_points
from utils.errors import ConfigError


EVENT_POINTS = '(0,1);(0,12);(1,4);(1,9);(4,2);(4,11)'


@pytest.mark.parametrize('k, expected', [
    (1, [(0, 0)]),
    (2, [(0, 0), (1, 0)]),
    (4, [(0, 0), (1, 0), (0, 1), (2, 0)]),
    (5, [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1)]),
])
def test_riemann_roch_basis(k, expected):
    assert riemann_roch_basis(k) == expected


def test_riemann_roch_basis_rejects_zero():
    with pytest.raises(ConfigError):
        riemann_roch_basis(0)


def test_generator_matrix_shape(curve13):
    code = build_code(curve13, parse_points(curve13, EVENT_POINTS), 3)
    assert code.n == 6 and code.k == 3
    assert code.gen_matrix.shape == (3, 6)
    assert np.asarray(code.gen_matrix)[0].tolist() == [1] * 6
    assert code.center == INFINITY


def test_shared_x_coordinate_breaks_mds(curve13):
    code = build_code(curve13, [CurvePoint(0, 1), CurvePoint(0, 12), CurvePoint(1, 4)], 2)
    iso = curve_iso(curve13)
    verdict = dual_verdict(code, iso)
    assert verdict.rank is False
    assert verdict.sumset is False
    assert verdict.oracle is False
    assert verdict.agree


def test_distinct_x_coordinates_give_mds(curve13):
    code = build_code(curve13, [CurvePoint(0, 1), CurvePoint(1, 4), CurvePoint(4, 2)], 2)
    assert is_mds_rank(code)
    assert is_mds_sumset(code, curve_iso(curve13))
    assert min_distance_oracle(code).d == 2


def test_event_instance_verdicts_agree(curve13):
    code = build_code(curve13, parse_points(curve13, EVENT_POINTS), 3)
    verdict = dual_verdict(code, curve_iso(curve13))
    assert verdict.agree
    assert verdict.oracle is not None
    assert verdict.to_json()['methods_agree']


def test_general_centre_matches_translated_code(curve13):
    Q = CurvePoint(7, 0)
    P = parse_points(curve13, EVENT_POINTS)
    code = build_code(curve13, P, 3, Q)
    moved = build_code(curve13, [curve13.sub(point, Q) for point in P], 3)
    assert np.array_equal(np.asarray(code.gen_matrix), np.asarray(moved.gen_matrix))
    assert divisor_point(curve13, code.divisor) == curve13.mul(3, Q)
    assert dual_verdict(code, curve_iso(curve13)).agree


def test_build_code_validation(curve13):
    P = parse_points(curve13, EVENT_POINTS)
    with pytest.raises(ConfigError):
        build_code(curve13, P[:2] + P[:1], 1)
    with pytest.raises(ConfigError):
        build_code(curve13, P, 2, P[0])
    with pytest.raises(ConfigError):
        build_code(curve13, P, 6)
    with pytest.raises(ConfigError):
        build_code(curve13, [CurvePoint(0, 2)] + P, 2)


def test_sumset_check_needs_matching_curve(curve13):
    code = build_code(curve13, parse_points(curve13, EVENT_POINTS), 3)
    with pytest.raises(ConfigError):
        is_mds_sumset(code, curve_iso(Curve(11, 1, 1)))


def test_divisor_spec():
    D = DivisorSpec(((CurvePoint(0, 1), 2), (INFINITY, 1)))
    assert D.degree == 3
    assert D.to_json() == [['(0,1)', 2], ['inf', 1]]


def test_oracle_refuses_large_message_spaces():
    C = Curve(61, 1, 1)
    points = enumerate_points(C)[1:5]
    code = build_code(C, points, 3)
    with pytest.raises(ConfigError):
        min_distance_oracle(code)
    assert dual_verdict(code, curve_iso(C)).oracle is None


def _equivalence_run(instances, seed):
    rng = np.random.default_rng(seed)
    primes = list(primerange(5, 62))
    for _ in range(instances):
        code, iso = random_instance(rng, primes, 12)
        verdict = dual_verdict(code, iso)
        assert verdict.agree, code.to_json()


def test_rank_and_sumset_verdicts_agree():
    _equivalence_run(60, seed=11)


@pytest.mark.slow
def test_rank_and_sumset_verdicts_agree_acceptance_run():
    _equivalence_run(1000, seed=0)


def test_exhaustive_search_on_small_curve():
    record = search_curve(Curve(5, -1, 0))
    assert record.N == 8
    assert record.certified and not record.partial
    if record.k is not None:
        assert 3 <= record.k <= record.size - 3


def test_even_order_search_reaches_half(curve13):
    record = search_curve(curve13, budget=300, seed=5)
    assert record.N == 18
    assert record.size >= 9
    assert record.k is not None
    assert record.rank_verified is not False
    body = record.to_json()
    assert body['parity'] == 'even'
    assert body['gap_half'] <= 0
    assert body['gap_general'] == hr_general_bound(18) - record.size


def test_curves_over():
    rng = np.random.default_rng(0)
    assert len(curves_over(5, None, rng)) == 20
    sample = curves_over(11, 4, rng)
    assert len(sample) == 4 and sample == sorted(sample)


def test_mds_search_validation_and_order():
    with pytest.raises(ConfigError):
        mds_search([9], budget=10, workers=1)
    records = mds_search([7, 5], budget=20, seed=1, curves_per_prime=2, workers=1)
    assert [r.curve.p for r in records] == [5, 5, 7, 7]
    for record in records:
        assert set(record.csv_row()) >= {'q', 'N', 'size', 'certified'}
