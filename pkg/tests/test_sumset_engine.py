import itertools

import numpy as np
import pytest

from utils.abelian_group import ElementSet, GroupSpec, abelian_groups_of_order, build_group
from utils.errors import ConfigError, MemoryCapExceeded
from utils.sumset_engine import (
    Multiset, batch_cyclic_layer_sizes, brute_force_sumset, complement_transform, covers_group, dgm_bound,
    dp_witness, dsh_bound, gamma, half_dense_prime_check, min_truncated_mass, min_truncated_mass_oracle,
    multiset_sigma, multiset_witness, restricted_sumset_table,
)


def test_small_cyclic_layers(z7):
    A = ElementSet.from_indices(z7, [1, 2, 3])
    table = restricted_sumset_table(z7, A, 3)
    assert table.layer(0) == ElementSet.singleton(z7, 0)
    assert table.layer(1) == A
    assert table.layer(2) == ElementSet.from_indices(z7, [3, 4, 5])
    assert table.layer(3) == ElementSet.singleton(z7, 6)
    assert table.layer(4).size == 0


def test_layers_beyond_kmax_use_complement(z7):
    A = ElementSet.from_indices(z7, [1, 2, 3])
    table = restricted_sumset_table(z7, A, 1)
    assert table.layer(2) == ElementSet.from_indices(z7, [3, 4, 5])
    assert complement_transform(table, 3) == ElementSet.singleton(z7, 6)
    with pytest.raises(ConfigError):
        complement_transform(table, 1)


def test_table_matches_brute_force_on_all_small_groups():
    rng = np.random.default_rng(7)
    for g in range(2, 13):
        for G in abelian_groups_of_order(g):
            for _ in range(5):
                A = ElementSet.from_indices(G, rng.choice(g, size=int(rng.integers(g + 1)), replace=False))
                table = restricted_sumset_table(G, A, A.size)
                for k in range(A.size + 1):
                    assert table.layer(k) == brute_force_sumset(G, A, k), (G.label, A, k)


def test_complement_identity_on_product_group():
    G = build_group('Z4xZ6')
    A = ElementSet.from_indices(G, [0, 1, 5, 7, 10, 13, 17, 22])
    table = restricted_sumset_table(G, A, A.size)
    abar = A.element_sum()
    for k in range(A.size + 1):
        assert table.layer(k) == table.layer(A.size - k).subtracted_from(abar)


@pytest.mark.parametrize('label', ['Z11', 'Z3xZ6', 'Z2xZ2xZ4'])
def test_sumsets_grow_with_the_set(label):
    G = build_group(label)
    rng = np.random.default_rng(11)
    for _ in range(20):
        B = ElementSet.from_indices(G, rng.choice(G.order, size=int(rng.integers(2, 10)), replace=False))
        A = ElementSet.from_indices(G, B.indices()[rng.random(B.size) < 0.6])
        for k in range(A.size + 1):
            assert gamma(G, A, k).issubset(gamma(G, B, k)), (A, B, k)


@pytest.mark.parametrize('label', ['Z11', 'Z3xZ6', 'Z2xZ2xZ4'])
def test_translating_the_set_translates_each_sumset(label):
    G = build_group(label)
    rng = np.random.default_rng(12)
    for _ in range(20):
        A = ElementSet.from_indices(G, rng.choice(G.order, size=int(rng.integers(1, 9)), replace=False))
        t = int(rng.integers(G.order))
        table = restricted_sumset_table(G, A, A.size)
        shifted = restricted_sumset_table(G, A.translate(t), A.size)
        for k in range(A.size + 1):
            assert shifted.layer(k) == table.layer(k).translate(G.smul(k, t)), (A, t, k)


def test_kmax_outside_range_is_rejected(z7):
    A = ElementSet.from_indices(z7, [1, 2])
    with pytest.raises(ConfigError):
        restricted_sumset_table(z7, A, 3)
    with pytest.raises(ConfigError):
        restricted_sumset_table(build_group('Z5'), A, 1)


def test_memory_cap(monkeypatch):
    monkeypatch.setenv('SUMSETLAB_MEM_CAP', '64')
    G = build_group('Z100')
    with pytest.raises(MemoryCapExceeded):
        restricted_sumset_table(G, ElementSet.full(G), 3)


def test_gamma_and_covers_group(z7):
    full = ElementSet.full(z7)
    for k in range(1, 7):
        assert covers_group(z7, full, k)
        assert gamma(z7, full, k).is_full()
    assert not covers_group(z7, full, 7)
    assert gamma(z7, full, 7) == ElementSet.singleton(z7, 0)
    assert not covers_group(z7, ElementSet.from_indices(z7, [1, 2, 3]), 2)


def test_dp_witness_returns_valid_subsets(z7):
    A = ElementSet.from_indices(z7, [1, 2, 3, 5])
    table = restricted_sumset_table(z7, A, 2)
    for k in range(A.size + 1):
        layer = table.layer(k)
        for target in range(7):
            witness = dp_witness(table, k, target)
            if target in layer:
                assert witness.size == k
                assert witness.issubset(A)
                assert witness.element_sum().index == target
            else:
                assert witness is None


def test_dp_witness_in_product_group():
    G = GroupSpec((3, 4))
    A = ElementSet.from_indices(G, [1, 4, 6, 7, 11])
    table = restricted_sumset_table(G, A, A.size)
    for target in table.layer(3):
        witness = dp_witness(table, 3, target)
        assert witness.size == 3 and witness.element_sum().index == target


def test_dp_witness_falls_back_to_prefix_tables(monkeypatch):
    G = build_group('Z31')
    A = ElementSet.from_indices(G, range(0, 31, 2))
    table = restricted_sumset_table(G, A, 4)
    # room for the table itself, not for the arrival snapshots
    monkeypatch.setenv('SUMSETLAB_MEM_CAP', str(31 * 5))
    witness = dp_witness(table, 4, 3)
    assert witness.size == 4 and witness.element_sum().index == 3


def test_multiset_subsums():
    U = Multiset.from_values(5, [1, 1, 2])
    assert multiset_sigma(U, 2) == ElementSet.from_indices(GroupSpec((5,)), [2, 3])
    assert multiset_sigma(U, 3) == ElementSet.singleton(GroupSpec((5,)), 4)
    assert multiset_witness(U, 2, 3) == [1, 2]
    assert multiset_witness(U, 2, 4) is None
    with pytest.raises(ConfigError):
        multiset_sigma(U, 4)


def test_multiset_rejects_bad_vectors():
    with pytest.raises(ConfigError):
        Multiset(5, (1, 2))
    with pytest.raises(ConfigError):
        Multiset(3, (1, -1, 0))


def test_dsh_bound_values(z7):
    assert dsh_bound(7, 3, 2) == 3
    assert dsh_bound(7, 6, 3) == 7
    assert gamma(z7, ElementSet.from_indices(z7, [1, 2, 3]), 2).size == dsh_bound(7, 3, 2)
    with pytest.raises(ConfigError):
        dsh_bound(9, 3, 2)
    with pytest.raises(ConfigError):
        dsh_bound(7, 3, 4)


def test_dgm_bound_holds_for_all_small_multisets():
    p = 5
    for mult in itertools.product(range(3), repeat=p):
        U = Multiset(p, mult)
        for length in range(1, U.total + 1):
            sigma = multiset_sigma(U, length)
            if not sigma.is_full():
                assert sigma.size >= dgm_bound(U, length)


def test_min_truncated_mass_matches_exhaustive_minimum():
    p, h = 5, 3
    oracle = min_truncated_mass_oracle(p, h)
    for length in range(1, h + 1):
        for u in range((p - 1) * h + 1):
            assert min_truncated_mass(p, h, length, u) == oracle[length, u]


def test_half_dense_prime_check():
    G = build_group('Z13')
    report = half_dense_prime_check(13, ElementSet.from_indices(G, [0, 1, 2, 3, 5, 8, 12]))
    assert report.hypothesis_met
    assert report.lengths == [3, 4]
    assert report.holds
    small = half_dense_prime_check(13, ElementSet.from_indices(G, [0, 1, 2]))
    assert not small.hypothesis_met


def test_batch_sizes_agree_with_tables():
    p = 11
    rows = np.array(list(itertools.combinations(range(p), 4)), dtype=np.int64)
    sizes = batch_cyclic_layer_sizes(p, rows, 4)
    G = build_group('Z11')
    for row, expected in zip(rows[::17], sizes[::17]):
        table = restricted_sumset_table(G, ElementSet.from_indices(G, row.tolist()), 4)
        assert [table.layer(k).size for k in range(5)] == expected.tolist()
