"""
Restricted sumsets, multiset subsums and the prime-field lower bounds

Gamma_k(A) is the set of sums of k pairwise distinct elements of A. Tables
are built with the 0/1-knapsack update: elements of A in ascending index,
lengths descending, each layer shifted by a group translation.
"""

import logging
import itertools
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from sympy import isprime

from utils import config
from utils.abelian_group import ElementSet, GroupElement, GroupSpec, check_in_group
from utils.errors import ConfigError, InternalAssertion, MemoryCapExceeded

# Configure logging
logger = logging.getLogger()

__all__ = [
    'ElementSet', 'SumsetTable', 'Multiset', 'restricted_sumset_table', 'dp_witness',
    'gamma', 'covers_group', 'brute_force_sumset', 'multiset_sigma', 'multiset_sigma_layers', 'multiset_witness',
    'complement_transform', 'dsh_bound', 'dgm_bound', 'min_truncated_mass',
    'min_truncated_mass_oracle', 'half_dense_prime_check', 'batch_cyclic_layer_sizes',
]


def _check_memory(nbytes: int) -> None:
    cap = config.mem_cap()
    if nbytes > cap:
        raise MemoryCapExceeded(nbytes, cap)


def _shift(G: GroupSpec, bits: np.ndarray, index: int) -> np.ndarray:
    """Flat bit vector of (set encoded by bits) + element index."""
    if G.rank == 1:
        return np.roll(bits, index)
    shifted = np.roll(bits.reshape(G.shape), shift=tuple(G.coords_table[index]),
                      axis=tuple(range(G.rank)))
    return shifted.reshape(-1)


@dataclass(frozen=True)
class SumsetTable:
    source: ElementSet
    k_max: int
    layers: List[ElementSet] = field(repr=False)

    @property
    def group(self) -> GroupSpec:
        return self.source.group

    def layer(self, k: int) -> ElementSet:
        """Gamma_k(A), through the complement identity when k > k_max."""
        a = self.source.size
        if k < 0 or k > a:
            return ElementSet.empty(self.group)
        if k <= self.k_max:
            return self.layers[k]
        return complement_transform(self, k)


@dataclass(frozen=True)
class Multiset:
    """Multiset over Z_p given by its multiplicity vector."""
    p: int
    mult: tuple

    def __post_init__(self):
        if self.p < 2:
            raise ConfigError(f"multiset modulus must be at least 2, got {self.p}")
        mult = tuple(int(v) for v in self.mult)
        if len(mult) != self.p:
            raise ConfigError(f"multiplicity vector has length {len(mult)}, expected {self.p}")
        if any(v < 0 for v in mult):
            raise ConfigError("multiplicities must be non-negative")
        object.__setattr__(self, 'mult', mult)

    @classmethod
    def from_values(cls, p: int, values: Sequence[int]) -> 'Multiset':
        counts = [0] * p
        for v in values:
            counts[int(v) % p] += 1
        return cls(p, tuple(counts))

    @property
    def total(self) -> int:
        return sum(self.mult)

    @property
    def support(self) -> List[int]:
        return [alpha for alpha, v in enumerate(self.mult) if v]

    @property
    def group(self) -> GroupSpec:
        return GroupSpec((self.p,))

    def values(self) -> List[int]:
        return [alpha for alpha, v in enumerate(self.mult) for _ in range(v)]


def restricted_sumset_table(G: GroupSpec, A: ElementSet, k_max: int) -> SumsetTable:
    """Compute Gamma_0(A), ..., Gamma_{k_max}(A).

    Args:
        G: The ambient group
        A: The set
        k_max: Largest length, at most |A|

    Returns:
        SumsetTable whose layer k is exactly Gamma_k(A)
    """
    check_in_group(G, A)
    if k_max < 0 or k_max > A.size:
        raise ConfigError(f"k_max={k_max} outside [0, |A|={A.size}]")
    _check_memory(G.order * (k_max + 1))

    layers = np.zeros((k_max + 1, G.order), dtype=bool)
    layers[0, 0] = True
    for processed, alpha in enumerate(A.indices()):
        for k in range(min(processed + 1, k_max), 0, -1):
            layers[k] |= _shift(G, layers[k - 1], int(alpha))

    logger.debug("Sumset table over %s: |A|=%d, k_max=%d", G, A.size, k_max)
    return SumsetTable(A, k_max, [ElementSet(G, row) for row in layers])


def gamma(G: GroupSpec, A: ElementSet, k: int) -> ElementSet:
    """Gamma_k(A) alone, building only min(k, |A| - k) layers."""
    a = A.size
    if k < 0 or k > a:
        return ElementSet.empty(G)
    table = restricted_sumset_table(G, A, min(k, a - k))
    return table.layer(k)


def covers_group(G: GroupSpec, A: ElementSet, k: int) -> bool:
    """Decide Gamma_k(A) = G, stopping as soon as a prefix of A already covers."""
    check_in_group(G, A)
    a = A.size
    if k < 0 or k > a:
        return False
    k = min(k, a - k)
    if k == 0:
        return False
    _check_memory(G.order * (k + 1))

    layers = np.zeros((k + 1, G.order), dtype=bool)
    layers[0, 0] = True
    for processed, alpha in enumerate(A.indices()):
        for kk in range(min(processed + 1, k), 0, -1):
            layers[kk] |= _shift(G, layers[kk - 1], int(alpha))
        if processed + 1 >= k and layers[k].all():
            return True
    return False


def brute_force_sumset(G: GroupSpec, A: ElementSet, k: int) -> ElementSet:
    """Gamma_k(A) by enumerating every k-subset."""
    if k == 0:
        return ElementSet.singleton(G, 0)
    if k < 0 or k > A.size:
        return ElementSet.empty(G)
    combos = np.array(list(itertools.combinations(A.indices(), k)), dtype=np.int64)
    sums = G.ravel(G.coords_table[combos].sum(axis=1))
    bits = np.zeros(G.order, dtype=bool)
    bits[sums] = True
    return ElementSet(G, bits)


def _arrival_table(G: GroupSpec, elements: np.ndarray, k: int) -> np.ndarray:
    """arrival[j, x] = least prefix length whose Gamma_j contains x."""
    _check_memory(G.order * (k + 1) * 5)
    never = len(elements) + 1
    arrival = np.full((k + 1, G.order), never, dtype=np.int32)
    arrival[0, 0] = 0
    layers = np.zeros((k + 1, G.order), dtype=bool)
    layers[0, 0] = True
    for processed, alpha in enumerate(elements):
        for kk in range(min(processed + 1, k), 0, -1):
            fresh = _shift(G, layers[kk - 1], int(alpha)) & ~layers[kk]
            arrival[kk][fresh] = processed + 1
            layers[kk] |= fresh
    return arrival


def _witness_from_arrivals(G: GroupSpec, elements: np.ndarray, arrival: np.ndarray,
                           k: int, target: int) -> List[int]:
    chosen = []
    for kk in range(k, 0, -1):
        j = int(arrival[kk, target])
        alpha = int(elements[j - 1])
        chosen.append(alpha)
        target = G.sub(target, alpha)
    return chosen


def _verify_witness(G: GroupSpec, A: ElementSet, k: int, target: int, chosen: List[int]) -> ElementSet:
    W = ElementSet.from_indices(G, chosen)
    if W.size != k or len(chosen) != k or not W.issubset(A) or G.sum_indices(chosen) != target:
        raise InternalAssertion(f"witness {sorted(chosen)} fails for k={k}, target={target}",
                                counterexample={'set': A.to_json(), 'k': k, 'target': target})
    return W


def dp_witness(table: SumsetTable, k: int, target: Union[int, GroupElement]) -> Optional[ElementSet]:
    """k distinct elements of A summing to target, or None when target is not in Gamma_k(A).

    The back-trace recomputes the DP over A, recording for every layer and
    group element the first prefix of A at which it becomes reachable.
    """
    G = table.group
    A = table.source
    target = G.element(target).index
    a = A.size
    if k < 0 or k > a:
        return None
    if k > table.k_max and a - k > table.k_max:
        raise ConfigError(f"length {k} is beyond k_max={table.k_max} and its complement")
    if target not in table.layer(k):
        return None

    if k > table.k_max:
        # Complement: remove a witness for Abar - target of length a - k
        abar = A.element_sum().index
        rest = dp_witness(table, a - k, G.sub(abar, target))
        return _verify_witness(G, A, k, target, (A - rest).indices().tolist())

    elements = A.indices()
    try:
        arrival = _arrival_table(G, elements, k)
        chosen = _witness_from_arrivals(G, elements, arrival, k, target)
    except MemoryCapExceeded:
        logger.debug("Arrival table exceeds memory cap; recomputing prefix tables")
        chosen = _witness_by_prefixes(G, elements, k, target)
    return _verify_witness(G, A, k, target, chosen)


def _witness_by_prefixes(G: GroupSpec, elements: np.ndarray, k: int, target: int) -> List[int]:
    chosen = []
    limit = len(elements)
    for kk in range(k, 0, -1):
        layers = np.zeros((kk + 1, G.order), dtype=bool)
        layers[0, 0] = True
        for processed in range(limit):
            alpha = int(elements[processed])
            for j in range(min(processed + 1, kk), 0, -1):
                layers[j] |= _shift(G, layers[j - 1], alpha)
            if layers[kk, target]:
                limit = processed
                chosen.append(alpha)
                target = G.sub(target, alpha)
                break
    return chosen


def complement_transform(table: SumsetTable, k: int) -> ElementSet:
    """Abar - Gamma_{a-k}(A), which equals Gamma_k(A)."""
    a = table.source.size
    if k < 0 or k > a:
        raise ConfigError(f"length {k} outside [0, |A|={a}]")
    if a - k > table.k_max:
        raise ConfigError(f"complement length {a - k} exceeds k_max={table.k_max}")
    abar = table.source.element_sum()
    return table.layers[a - k].subtracted_from(abar)


def _sigma_layers(p: int, items: Sequence[tuple], length: int) -> np.ndarray:
    """reach[j, s]: some sub-multiset of items with j elements sums to s."""
    reach = np.zeros((length + 1, p), dtype=bool)
    reach[0, 0] = True
    for alpha, v in items:
        previous = reach.copy()
        for j in range(1, length + 1):
            for c in range(1, min(v, j) + 1):
                reach[j] |= np.roll(previous[j - c], c * alpha)
    return reach


def multiset_sigma_layers(U: Multiset, max_length: int) -> np.ndarray:
    """Reachability rows reach[l, s] for 0 <= l <= max_length."""
    if max_length < 0 or max_length > U.total:
        raise ConfigError(f"length {max_length} outside [0, u={U.total}]")
    items = [(alpha, v) for alpha, v in enumerate(U.mult) if v]
    return _sigma_layers(U.p, items, max_length)


def multiset_sigma(U: Multiset, length: int) -> ElementSet:
    """Sigma_l(U): sums of l-element sub-multisets of U."""
    if length < 0 or length > U.total:
        raise ConfigError(f"length {length} outside [0, u={U.total}]")
    items = [(alpha, v) for alpha, v in enumerate(U.mult) if v]
    reach = _sigma_layers(U.p, items, length)
    return ElementSet(U.group, reach[length])


def multiset_witness(U: Multiset, length: int, target: int) -> Optional[List[int]]:
    """Lexicographically least sorted sub-multiset of U with the given length and sum."""
    if length < 0 or length > U.total:
        raise ConfigError(f"length {length} outside [0, u={U.total}]")
    target %= U.p
    items = [(alpha, v) for alpha, v in enumerate(U.mult) if v]
    # suffix[i] = reachability using items[i:]
    suffix = [None] * (len(items) + 1)
    for i in range(len(items), -1, -1):
        suffix[i] = _sigma_layers(U.p, items[i:], length)
    if not suffix[0][length, target]:
        return None

    chosen: List[int] = []
    remaining, rest = length, target
    for i, (alpha, v) in enumerate(items):
        for c in range(min(v, remaining), -1, -1):
            s = (rest - c * alpha) % U.p
            if suffix[i + 1][remaining - c, s]:
                chosen.extend([alpha] * c)
                remaining -= c
                rest = s
                break
    if remaining or sum(chosen) % U.p != target:
        raise InternalAssertion(f"multiset witness failed for length {length}, target {target}")
    return chosen


def dsh_bound(p: int, a: int, k: int) -> int:
    """min(p, k*a - k^2 + 1), the prime-field lower bound for |Gamma_k(A)|."""
    if not isprime(p):
        raise ConfigError(f"{p} is not prime")
    if not 1 <= k <= a <= p:
        raise ConfigError(f"need 1 <= k <= a <= p, got k={k}, a={a}, p={p}")
    return min(p, k * a - k * k + 1)


def dgm_bound(U: Multiset, length: int) -> int:
    """1 - l + sum_gamma min(l, v_gamma(U)).

    Only meaningful as a lower bound on |Sigma_l(U)| when Sigma_l(U) != Z_p.
    """
    if not 1 <= length <= U.total:
        raise ConfigError(f"length {length} outside [1, u={U.total}]")
    return 1 - length + sum(min(length, v) for v in U.mult)


def min_truncated_mass(p: int, h: int, length: int, u: int) -> int:
    """Minimum of sum_i min(l, v_i) over v_1..v_{p-1} in [0, h] with total u."""
    if p < 2 or h < 1:
        raise ConfigError(f"need p >= 2 and h >= 1, got p={p}, h={h}")
    if not 1 <= length <= h:
        raise ConfigError(f"length {length} outside [1, h={h}]")
    if not 0 <= u <= (p - 1) * h:
        raise ConfigError(f"total {u} outside [0, (p-1)h={(p - 1) * h}]")
    q, r = divmod(u, h)
    return q * length + min(length, r)


def min_truncated_mass_oracle(p: int, h: int) -> np.ndarray:
    """Exhaustive minima, indexed [l, u] for 1 <= l <= h and 0 <= u <= (p-1)h."""
    vectors = np.array(list(itertools.product(range(h + 1), repeat=p - 1)), dtype=np.int64)
    totals = vectors.sum(axis=1)
    best = np.full((h + 1, (p - 1) * h + 1), np.iinfo(np.int64).max, dtype=np.int64)
    for length in range(1, h + 1):
        mass = np.minimum(vectors, length).sum(axis=1)
        np.minimum.at(best[length], totals, mass)
    return best


@dataclass
class HalfDenseReport:
    p: int
    size: int
    hypothesis_met: bool
    dsh_minimum: Optional[int]
    lengths: List[int]
    covered: Dict[int, bool]

    @property
    def holds(self) -> bool:
        return all(self.covered.values())


def half_dense_prime_check(p: int, A: ElementSet) -> HalfDenseReport:
    """For p >= 13 and |A| > p/2, check Gamma_k(A) = Z_p for 3 <= k <= |A| - 3.

    The bound min over that range of k(a - k) + 1 is 3a - 8 >= (3p - 13)/2 >= p,
    so the prime-field bound alone forces full coverage.
    """
    G = GroupSpec((p,))
    check_in_group(G, A)
    a = A.size
    met = isprime(p) and p >= 13 and 2 * a > p
    lengths = list(range(3, a - 2))
    dsh_min = min((dsh_bound(p, a, k) for k in lengths), default=None) if isprime(p) else None
    covered: Dict[int, bool] = {}
    if lengths:
        table = restricted_sumset_table(G, A, min(a // 2, a))
        covered = {k: table.layer(k).is_full() for k in lengths}
    if met and not all(covered.values()):
        raise InternalAssertion(f"half-dense set in Z_{p} fails to cover", counterexample=A.to_json())
    return HalfDenseReport(p, a, met, dsh_min, lengths, covered)


def batch_cyclic_layer_sizes(p: int, sets: np.ndarray, k_max: int) -> np.ndarray:
    """|Gamma_k(A)| for many equal-size subsets of Z_p at once.

    Args:
        p: Modulus
        sets: Integer array of shape (M, a), one subset per row, distinct entries
        k_max: Largest length, at most a

    Returns:
        Array of shape (M, k_max + 1) with sizes[m, k] = |Gamma_k(row m)|
    """
    sets = np.asarray(sets, dtype=np.int64) % p
    if sets.ndim != 2:
        raise ConfigError(f"sets must be a 2-d array, got shape {sets.shape}")
    M, a = sets.shape
    if not 0 <= k_max <= a:
        raise ConfigError(f"k_max={k_max} outside [0, a={a}]")
    _check_memory(M * p * (k_max + 1 + 8))

    layers = np.zeros((M, k_max + 1, p), dtype=bool)
    layers[:, 0, 0] = True
    positions = np.arange(p)
    for j in range(a):
        # row m of layer k-1 shifted by sets[m, j]
        source = (positions[None, :] - sets[:, j][:, None]) % p
        for k in range(min(j + 1, k_max), 0, -1):
            layers[:, k] |= np.take_along_axis(layers[:, k - 1], source, axis=1)
    return layers.sum(axis=2)
