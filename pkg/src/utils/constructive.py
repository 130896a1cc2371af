"""
Witness-producing constructions: common-sum pairs, pair padding and fiber lifting

Every returned witness is checked before it leaves this module: k distinct
elements of A whose sum is the target.
"""

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, FrozenSet, List, Optional, Tuple, Union

import numpy as np

from utils.abelian_group import ElementSet, GroupElement, GroupSpec, QuotientMap, check_in_group
from utils.errors import ConfigError, HypothesisFailure, InternalAssertion
from utils.obstructions import normalize_translate, sigma_full_predicate
from utils.sumset_engine import Multiset, covers_group, dp_witness, gamma, multiset_witness, restricted_sumset_table

# Configure logging
logger = logging.getLogger()

# Constants
MAX_BASE_RETRIES = 32
MIN_LIFT_PRIME = 7
MIN_KERNEL = 4


@dataclass(frozen=True)
class PairFamily:
    beta: GroupElement
    pairs: Tuple[Tuple[int, int], ...]
    n_beta: int

    def __post_init__(self):
        G = self.beta.group
        seen = set()
        for first, second in self.pairs:
            if first == second or first in seen or second in seen:
                raise InternalAssertion(f"pairs {self.pairs} are not disjoint")
            if G.add(first, second) != self.beta.index:
                raise InternalAssertion(f"pair ({first}, {second}) does not sum to {self.beta}")
            seen.update((first, second))

    @property
    def n_pair(self) -> int:
        return len(self.pairs)

    def to_json(self) -> Dict[str, Any]:
        return {'beta': self.beta.index, 'n_beta': self.n_beta,
                'pairs': [list(p) for p in self.pairs], 'n_pair': self.n_pair}


@dataclass
class Witness:
    elements: ElementSet
    k: int
    target: GroupElement
    method: str
    details: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        body = {'k': self.k, 'target': self.target.index, 'method': self.method,
                'elements': self.elements.indices().tolist()}
        body.update(self.details)
        return body


def representation_counts(G: GroupSpec, A: ElementSet) -> np.ndarray:
    """n_beta = #{alpha in A : beta - alpha in A} for every beta."""
    counts = np.zeros(G.order, dtype=np.int64)
    members = A.indices()
    for alpha in members:
        np.add.at(counts, G.add_all(int(alpha))[members], 1)
    return counts


def _pair_family(G: GroupSpec, A: ElementSet) -> PairFamily:
    counts = representation_counts(G, A)
    beta = int(np.argmax(counts))
    used = set()
    pairs = []
    for alpha in A:
        partner = G.sub(beta, alpha)
        if partner == alpha or partner not in A or alpha in used or partner in used:
            continue
        used.update((alpha, partner))
        pairs.append((alpha, partner))
    return PairFamily(G.element(beta), tuple(pairs), int(counts[beta]))


def best_pair_sum(G: GroupSpec, A: ElementSet) -> PairFamily:
    """The common sum beta with the most representations, and disjoint pairs summing to it.

    In odd order the involution alpha -> beta - alpha has at most one fixed
    point, so greedy pairing yields n_beta // 2 >= (a^2/g - 1)/2 pairs.
    """
    check_in_group(G, A)
    if G.order % 2 == 0:
        raise ConfigError(f"pair extraction needs odd order, {G} has order {G.order}")
    if A.size < 2:
        raise ConfigError(f"need at least two elements, got {A.size}")
    family = _pair_family(G, A)
    if 2 * family.n_pair < family.n_beta - 1 or 2 * family.n_pair * G.order < A.size ** 2 - G.order:
        raise InternalAssertion(f"only {family.n_pair} pairs for n_beta={family.n_beta}")
    return family


def _validated(G: GroupSpec, A: ElementSet, k: int, target: int, chosen: List[int],
               method: str, details: Dict[str, Any]) -> Witness:
    W = ElementSet.from_indices(G, chosen)
    if len(chosen) != k or W.size != k or not W.issubset(A) or G.sum_indices(chosen) != target:
        raise InternalAssertion(f"{method} produced an invalid witness {sorted(chosen)}",
                                counterexample={'A': A.to_json(), 'k': k, 'target': target})
    return Witness(W, k, G.element(target), method, details)


def pair_padding_represent(G: GroupSpec, A: ElementSet, k: int, target: Union[int, GroupElement],
                           family: Optional[PairFamily] = None, strict: bool = False) -> Witness:
    """Write target as a sum of k distinct elements of A by padding a short base with pairs.

    A base of length 3 (k odd) or 4 (k even) solves target - l*beta, and l
    disjoint beta-pairs avoiding the base complete it. Base solutions are
    retried, excluding base elements, up to 32 times.

    Args:
        G: The group
        A: Set with Gamma_3(A) = Gamma_4(A) = G
        k: Length, at least 3
        target: Element to represent
        family: Pairs with a common sum (default: best_pair_sum over any order)
        strict: Refuse unless n_pair >= floor((k-3)/2) + 4

    Returns:
        Witness with method 'pair-padding'
    """
    check_in_group(G, A)
    target = G.element(target).index
    if k < 3:
        raise ConfigError(f"pair padding needs k >= 3, got {k}")
    if not covers_group(G, A, 3):
        raise HypothesisFailure('Gamma_3(A) = G')
    if not covers_group(G, A, 4):
        raise HypothesisFailure('Gamma_4(A) = G')
    if family is None:
        family = _pair_family(G, A)
    base_len = 3 if k % 2 else 4
    ell = (k - base_len) // 2
    hypothesis_met = family.n_pair >= (k - 3) // 2 + 4
    if strict and not hypothesis_met:
        raise HypothesisFailure('pair count', f"n_pair={family.n_pair} < {(k - 3) // 2 + 4}")
    if family.n_pair < ell:
        raise HypothesisFailure('pair count', f"need {ell} pairs, have {family.n_pair}")

    base_target = G.sub(target, G.smul(ell, family.beta.index))
    queue = deque([frozenset()])
    tried = set()
    retries = 0
    while queue and retries < MAX_BASE_RETRIES:
        excluded: FrozenSet[int] = queue.popleft()
        if excluded in tried:
            continue
        tried.add(excluded)
        retries += 1
        pool = A - ElementSet.from_indices(G, excluded)
        if pool.size < base_len:
            continue
        base = dp_witness(restricted_sumset_table(G, pool, base_len), base_len, base_target)
        if base is None:
            continue
        free = [p for p in family.pairs if p[0] not in base and p[1] not in base]
        if len(free) >= ell:
            chosen = base.indices().tolist() + [x for p in free[:ell] for x in p]
            logger.debug("Pair padding for k=%d succeeded after %d base attempts", k, retries)
            return _validated(G, A, k, target, chosen, 'pair-padding', {
                'beta': family.beta.index, 'n_pair': family.n_pair, 'hypothesis_met': hypothesis_met,
                'base': base.indices().tolist(), 'pairs': [list(p) for p in free[:ell]],
                'retries': retries,
            })
        for alpha in base:
            queue.append(excluded | {alpha})
    raise HypothesisFailure('pair avoidance', f"no base solution left {ell} free pairs after {retries} attempts")


def fiber_lift_represent(G: GroupSpec, pi: QuotientMap, A: ElementSet, k: int,
                         target: Union[int, GroupElement]) -> Witness:
    """Represent target using l = k - 3 elements outside the kernel and a kernel triple.

    A is normalized first so that its densest fiber is the kernel; the
    witness is translated back before it is returned.

    Args:
        G: The group
        pi: Surjection onto Z_p, p >= 7
        A: The set
        k: Length (k = 3, or k >= 6)
        target: Element to represent

    Returns:
        Witness with method 'fiber-lift'
    """
    check_in_group(G, A)
    target = G.element(target).index
    p = pi.p
    h = pi.kernel.size
    if p < MIN_LIFT_PRIME:
        raise HypothesisFailure('p >= 7', f"p={p}")
    if h < MIN_KERNEL:
        raise HypothesisFailure('h >= 4', f"h={h}")
    if k < 3:
        raise HypothesisFailure('length range', f"k={k}")

    normalized = normalize_translate(G, pi, A)
    shift = normalized.shift.index
    A_norm = normalized.translated
    A0 = normalized.kernel_fiber
    if A0.size < 3 or gamma(G, A0, 3) != pi.kernel.members:
        raise HypothesisFailure('Gamma_3(A_0) = H')
    local_target = G.sub(target, G.smul(k, shift))

    ell = k - 3
    outside: List[int] = []
    details: Dict[str, Any] = {'p': p, 'h': h, 'shift': shift, 'ell': ell}
    if ell > 0:
        sizes = normalized.fiber_sizes
        U = Multiset(p, tuple([0] + sizes[1:]))
        details['u'] = U.total
        if ell < 3:
            raise HypothesisFailure('length range', f"l={ell} below 3")
        if 2 * U.total <= (p - 2) * h:
            raise HypothesisFailure('mass hypothesis', f"u={U.total} <= (p-2)h/2={(p - 2) * h / 2}")
        if not 3 <= ell <= U.total - p + 1:
            raise HypothesisFailure('length range', f"l={ell} outside [3, {U.total - p + 1}]")
        sigma_full_predicate(p, h, U, ell)
        residues = multiset_witness(U, ell, pi(local_target))
        if residues is None:
            raise InternalAssertion(f"Sigma_{ell} misses residue {pi(local_target)}")
        for r in sorted(set(residues)):
            fiber = pi.fiber(A_norm, r).indices()
            outside.extend(int(x) for x in fiber[:residues.count(r)])
        details['residues'] = residues

    remainder = G.sub(local_target, G.sum_indices(outside))
    if pi(remainder) != 0:
        raise HypothesisFailure('kernel target', f"residue {pi(remainder)} left for the kernel triple")
    triple = dp_witness(restricted_sumset_table(G, A0, 3), 3, remainder)
    if triple is None:
        raise InternalAssertion(f"kernel triple for {remainder} missing although Gamma_3(A_0) = H")
    chosen = [G.add(x, shift) for x in outside + triple.indices().tolist()]
    return _validated(G, A, k, target, chosen, 'fiber-lift', details)
