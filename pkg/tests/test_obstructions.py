import numpy as np
import pytest

from utils.abelian_group import (
    ElementSet, GroupSpec, QuotientMap, abelian_groups_of_order, build_group, index_subgroups,
)
from utils.errors import ConfigError
from utils.obstructions import (
    boundary_lengths, consecutive_cover, coset_intersection_audit, density_constant, inverse_scan,
    lev_size_threshold, normalize_translate, obstruction_scan, odd_density_predicate, sigma_full_predicate,
)
from utils.sumset_engine import Multiset


@pytest.fixture
def two_index5_cosets():
    G = build_group('Z1235')
    residues = np.arange(G.order) % 5
    return G, ElementSet(G, np.isin(residues, (0, 1)))


def test_thresholds_and_constants():
    assert lev_size_threshold(build_group('Z1235')) == 1235
    assert lev_size_threshold(build_group('Z2xZ1000')) == 312 * 4 + 923
    assert density_constant(1235) == (2, 5)
    assert density_constant(1241) == (5, 13)


def test_scan_reports_index5_coset_pair(two_index5_cosets):
    G, A = two_index5_cosets
    report = obstruction_scan(G, A, 0)
    assert A.size == 494
    assert not report.density_low
    assert report.index2_cosets == []
    assert [hit.residues for hit in report.index5_pairs] == [(0, 1)]
    assert not report.gamma3_full
    assert report.alternatives() == {'(i)': False, '(ii)': False, '(iii)': True, '(iv)': False}
    assert not report.escapes_structure


def test_scan_reports_index2_coset_with_slack():
    G = build_group('Z4xZ2')
    H = ElementSet.from_elements(G, [(0, 0), (2, 0), (0, 1), (2, 1)])
    A = H | ElementSet.from_elements(G, [(1, 0)])
    assert obstruction_scan(G, A, 0).index2_cosets == []
    hits = obstruction_scan(G, A, 1).index2_cosets
    assert any(hit.excess == 1 for hit in hits)
    with pytest.raises(ConfigError):
        obstruction_scan(G, A, -1)


def test_scan_finds_every_index2_coset_holding_the_set():
    rng = np.random.default_rng(5)
    for g in range(2, 33, 2):
        for G in abelian_groups_of_order(g):
            for pi in index_subgroups(G, 2):
                for C in pi.cosets():
                    members = C.indices()
                    size = int(rng.integers(1, min(8, members.size) + 1))
                    A = ElementSet.from_indices(G, rng.choice(members, size=size, replace=False))
                    hits = obstruction_scan(G, A, 0).index2_cosets
                    assert any(hit.cosets() == C for hit in hits), (G.label, pi.coefficients, A)


def test_inverse_scan_on_structured_set(two_index5_cosets):
    G, A = two_index5_cosets
    result = inverse_scan(G, A, 3)
    assert result.size_hypothesis and result.density_hypothesis
    assert not result.covered
    assert result.conclusion_holds


def test_odd_density_boundary_is_strict(two_index5_cosets):
    G, A = two_index5_cosets
    assert not odd_density_predicate(G, A.size, 3).predicts_full
    assert odd_density_predicate(G, A.size + 1, 3).predicts_full
    assert not odd_density_predicate(build_group('Z1236'), 900, 3).hypothesis_met


def test_boundary_lengths():
    result = boundary_lengths(build_group('Z1235'), 700)
    assert result.hypothesis_met
    assert result.d == 208
    assert result.low == (3, 208) and result.high == (492, 697)
    assert result.contains(100) and not result.contains(300)


@pytest.mark.parametrize('label, expected', [('Z2xZ2', 1), ('Z4xZ2', 2), ('Z2xZ2xZ2', 2), ('Z8', 0)])
def test_coset_intersections_stay_below_quarter(label, expected):
    assert coset_intersection_audit(build_group(label)) == expected


def test_coset_audit_needs_even_order():
    with pytest.raises(ConfigError):
        coset_intersection_audit(build_group('Z9'))


def test_normalize_moves_densest_fiber_into_kernel():
    G = GroupSpec((7, 5))
    pi = QuotientMap(G, 7, (1, 0))
    A = ElementSet.from_elements(G, [(3, y) for y in range(5)] + [(0, 0)])
    normalized = normalize_translate(G, pi, A)
    assert normalized.shift.coords == (3, 0)
    assert normalized.fiber_sizes == [5, 0, 0, 0, 1, 0, 0]
    assert normalized.kernel_fiber == pi.kernel.members


def test_consecutive_cover_in_z3():
    result = consecutive_cover(3, Multiset(3, (0, 1, 1)), 0)
    assert result.covered
    assert set(result.witnesses) == {0, 1, 2}
    for residue, (length, values) in result.witnesses.items():
        assert len(values) == length and sum(values) % 3 == residue


def test_consecutive_cover_preconditions():
    with pytest.raises(ConfigError):
        consecutive_cover(3, Multiset(3, (1, 1, 1)), 0)
    with pytest.raises(ConfigError):
        consecutive_cover(7, Multiset(7, (0, 1, 1, 1, 1, 1, 1)), 0)
    with pytest.raises(ConfigError):
        consecutive_cover(5, Multiset(5, (0, 1, 1, 0, 0)), 0)


def test_consecutive_cover_exhaustive_small_z5():
    for a in range(4):
        for b in range(4):
            for c in range(4):
                for d in range(4):
                    U = Multiset(5, (0, a, b, c, d))
                    for start in range(U.total - 3):
                        assert consecutive_cover(5, U, start, with_witnesses=False).covered, (U.mult, start)


def test_sigma_full_predicate():
    dense = sigma_full_predicate(7, 4, Multiset(7, (0, 4, 4, 4, 0, 0, 0)), 3)
    assert dense.hypothesis_met and dense.verified_full
    sparse = sigma_full_predicate(7, 4, Multiset(7, (0, 1, 0, 0, 0, 0, 0)), 1)
    assert not sparse.hypothesis_met and sparse.verified_full is False
    with pytest.raises(ConfigError):
        sigma_full_predicate(7, 2, Multiset(7, (0, 3, 0, 0, 0, 0, 0)), 1)
