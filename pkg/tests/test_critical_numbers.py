import pytest

from utils.abelian_group import ElementSet, GroupSpec, build_group
from utils.critical_numbers import (
    dichotomy_table, lev_sampling, max_noncovering_set, mu_k_exact, recheck_record, spot_check_theorem_a,
    theorem_a_hypotheses, theorem_predict,
)
from utils.errors import ConfigError
from utils.sumset_engine import covers_group, gamma


def test_mu3_of_cyclic_group_of_order_eight():
    record = mu_k_exact(build_group('Z8'), 3)
    assert record.certified
    assert record.mu_k == 6
    assert record.witness.size == 5
    assert record.missed_target not in gamma(record.group, record.witness, 3)
    assert recheck_record(record)


def test_mu3_of_klein_group():
    record = mu_k_exact(build_group('Z2xZ2'), 3)
    assert record.certified and record.mu_k == 4


@pytest.mark.parametrize('label', ['Z12', 'Z2xZ6'])
def test_mu3_at_order_twelve_is_seven(label):
    G = build_group(label)
    record = mu_k_exact(G, 3)
    assert record.certified
    assert record.mu_k == 7
    assert record.to_json()['mu_exact'] == 7
    assert record.witness.size == 6
    assert recheck_record(record)


def test_mu_is_order_plus_one_when_group_never_covers():
    G = build_group('Z4')
    assert not covers_group(G, ElementSet.full(G), 4)
    record = mu_k_exact(G, 4)
    assert record.mu_k == 5
    assert record.witness.is_full()


def test_search_result_is_uncertified_when_budget_runs_out():
    result = max_noncovering_set(build_group('Z12'), 3, budget=1)
    assert not result.certified
    record = mu_k_exact(build_group('Z12'), 3, budget=1)
    assert record.mu_k is None
    assert record.lower >= 7 and record.upper == 12


def test_interval_above_exact_cap(monkeypatch):
    monkeypatch.setenv('SUMSETLAB_EXACT_CAP', '4')
    record = mu_k_exact(build_group('Z8'), 3)
    assert not record.certified
    assert record.mu_k is None
    assert record.lower == 6 and record.upper == 8


def test_mu_rejects_bad_length():
    with pytest.raises(ConfigError):
        mu_k_exact(build_group('Z8'), 9)


def test_prediction_reports_unmet_branches():
    prediction = theorem_predict(GroupSpec((45,)), 4)
    assert prediction.value is None
    assert prediction.reason == 'no branch hypotheses met'
    branch = next(b for b in prediction.branches if b.name == 'odd-k4')
    assert branch.value == 20
    assert not branch.met


def test_prediction_even_branch_at_threshold_scale():
    prediction = theorem_predict(GroupSpec((46320,)), 5)
    assert prediction.value == 23161
    assert prediction.kind == 'exact'
    assert prediction.branch == 'even'


def test_prediction_flags_p5_seam():
    assert theorem_predict(GroupSpec((6175,)), 3).seam
    assert not theorem_predict(GroupSpec((6175,)), 6).seam


def test_theorem_a_hypotheses_by_smallest_prime():
    assert theorem_a_hypotheses(GroupSpec((46320,))) == {'p_min': 2, 'threshold': 3094, 'met': True}
    assert theorem_a_hypotheses(GroupSpec((3705,)))['met']
    assert theorem_a_hypotheses(GroupSpec((25,)))['threshold'] == 6175
    assert not theorem_a_hypotheses(GroupSpec((49,)))['met']


def test_dichotomy_table_order_eight():
    records = dichotomy_table([8], [3], workers=1)
    assert [r.group.label for r in records] == ['Z2xZ2xZ2', 'Z2xZ4', 'Z8']
    for record in records:
        assert record.certified
        assert record.even_lower_bound == 5
        assert record.theorem_range == 'empty'
        assert record.even_bound_applies is False
        assert record.matches_even_bound is None
        assert record.mu_k >= 5
        row = record.csv_row()
        assert row['g'] == 8 and row['k'] == 3


def test_even_bound_is_compared_only_inside_its_length_range():
    records = {(r.group.label, r.k): r for r in dichotomy_table([12], [3, 5], workers=1)}
    for label in ('Z12', 'Z2xZ6'):
        inside, outside = records[label, 3], records[label, 5]
        assert inside.even_bound_applies and inside.theorem_range == 'in'
        assert inside.to_json()['match'] is True
        assert outside.even_bound_applies is False and outside.theorem_range == 'out'
        assert outside.to_json()['match'] is None
        assert outside.csv_row()['even_bound_applies'] is False


def test_dichotomy_table_skips_lengths_above_order():
    records = dichotomy_table([4], [3, 7], workers=1)
    assert {r.k for r in records} == {3}


def test_spot_check_small_group_shape():
    result = spot_check_theorem_a(GroupSpec((40,)), 2, seed=1, low_lengths=(3, 4), high_offsets=(3,))
    assert result.size == 21
    assert result.lengths == [3, 4, 18]
    assert not result.hypotheses['met']


def test_lev_sampling_small_run():
    result = lev_sampling(GroupSpec((1235,)), 5, seed=3)
    assert result.size_hypothesis
    assert result.passed


@pytest.mark.slow
def test_spot_check_at_threshold_scale():
    result = spot_check_theorem_a(GroupSpec((46320,)), 20, seed=0)
    assert result.hypotheses['met']
    assert result.passed


@pytest.mark.slow
def test_lev_sampling_acceptance_run():
    assert lev_sampling(GroupSpec((1235,)), 1000, seed=0).passed
