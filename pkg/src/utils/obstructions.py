"""
Structural obstructions to covering: index-2 cosets and pairs of index-5 cosets

Also holds the normalization translate, the consecutive-length coverage
checks in Z_3 and Z_5 and the dense-multiset predicate for p >= 7.
"""

import logging
import itertools
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from sympy import isprime

from utils.abelian_group import (
    ElementSet, GroupElement, GroupSpec, QuotientMap, check_in_group, group_stats, index_subgroups,
)
from utils.errors import ConfigError, InternalAssertion
from utils.sumset_engine import Multiset, covers_group, multiset_sigma, multiset_sigma_layers, multiset_witness

# Configure logging
logger = logging.getLogger()

# Constants
LEV_SIZE_SLOPE = 312
LEV_SIZE_OFFSET = 923
ODD_MIN_ORDER = 1235
WINDOWS = {3: 3, 5: 5}


def lev_size_threshold(G: GroupSpec) -> int:
    """Smallest order for which the four-way classification of dense sets applies."""
    return LEV_SIZE_SLOPE * group_stats(G).torsion2 + LEV_SIZE_OFFSET


def density_constant(g: int) -> Tuple[int, int]:
    """c(g) as (numerator, denominator): 2/5 when 5 | g, else 5/13."""
    return (2, 5) if g % 5 == 0 else (5, 13)


def is_density_low(a: int, g: int) -> bool:
    return 13 * a <= 5 * g


@dataclass(frozen=True)
class CosetHit:
    """Union of cosets of one subgroup, with |A minus the union|."""
    quotient: QuotientMap
    residues: Tuple[int, ...]
    excess: int

    def cosets(self) -> ElementSet:
        mask = np.isin(self.quotient.residue, self.residues)
        return ElementSet(self.quotient.parent, mask)

    def to_json(self) -> Dict[str, Any]:
        return {
            'subgroup': list(self.quotient.coefficients),
            'index': self.quotient.p,
            'cosets': list(self.residues),
            'excess': self.excess,
        }


@dataclass
class ObstructionReport:
    source: ElementSet
    t: int
    density_low: bool
    index2_cosets: List[CosetHit]
    index5_pairs: List[CosetHit]
    gamma3_full: bool

    def __post_init__(self):
        for hit in self.index2_cosets + self.index5_pairs:
            excess = (self.source - hit.cosets()).size
            if excess != hit.excess or excess > self.t:
                raise InternalAssertion(f"coset hit {hit.to_json()} has true excess {excess}")

    def alternatives(self) -> Dict[str, bool]:
        return {
            '(i)': self.density_low,
            '(ii)': bool(self.index2_cosets),
            '(iii)': bool(self.index5_pairs),
            '(iv)': self.gamma3_full,
        }

    @property
    def escapes_structure(self) -> bool:
        """True when none of the structural alternatives (i)-(iii) holds."""
        return not (self.density_low or self.index2_cosets or self.index5_pairs)

    def to_json(self) -> Dict[str, Any]:
        return {
            'group': self.source.group.label,
            'size': self.source.size,
            't': self.t,
            'alternatives': self.alternatives(),
            'index2_cosets': [h.to_json() for h in self.index2_cosets],
            'index5_pairs': [h.to_json() for h in self.index5_pairs],
        }


@dataclass
class NormalizedSet:
    translated: ElementSet
    shift: GroupElement
    quotient: QuotientMap
    fiber_sizes: List[int]
    dense_asserted: bool

    @property
    def kernel_fiber(self) -> ElementSet:
        return self.quotient.fiber(self.translated, 0)


def normalize_translate(G: GroupSpec, pi: QuotientMap, A: ElementSet) -> NormalizedSet:
    """Translate A so that its densest fiber sits in the kernel of pi.

    The densest fiber is the one with the smallest residue among the largest,
    and the shift is its least element (zero when that fiber is already the
    kernel). When |A| > g/2 the kernel fiber of the result is asserted to hold
    more than h/2 elements.
    """
    check_in_group(G, A)
    sizes = pi.fiber_sizes(A)
    r = int(np.argmax(sizes))
    shift = 0 if r == 0 else int(pi.fiber(A, r).indices()[0])
    translated = A.translate(G.neg(shift))
    shifted_sizes = pi.fiber_sizes(translated)
    dense = 2 * A.size > G.order
    h = pi.kernel.size
    if dense and 2 * int(shifted_sizes[0]) <= h:
        raise InternalAssertion(f"normalized fiber {int(shifted_sizes[0])} not above h/2={h / 2}")
    logger.debug("Normalized %s by %d: fiber sizes %s", G, shift, shifted_sizes.tolist())
    return NormalizedSet(translated, G.element(shift), pi, [int(s) for s in shifted_sizes], dense)


def _coset_hits(A: ElementSet, d: int, width: int, t: int) -> List[CosetHit]:
    hits = []
    for pi in index_subgroups(A.group, d):
        sizes = pi.fiber_sizes(A)
        for residues in itertools.combinations(range(d), width):
            excess = A.size - int(sizes[list(residues)].sum())
            if excess <= t:
                hits.append(CosetHit(pi, residues, excess))
    return hits


def obstruction_scan(G: GroupSpec, A: ElementSet, t: int) -> ObstructionReport:
    """Report every alternative of the dense-set classification that A satisfies.

    Args:
        G: The group
        A: The set to classify
        t: Allowed number of elements outside the coset (or coset pair)

    Returns:
        ObstructionReport listing all index-2 cosets and index-5 coset pairs
        missing at most t elements of A
    """
    check_in_group(G, A)
    if t < 0:
        raise ConfigError(f"slack must be non-negative, got {t}")
    return ObstructionReport(
        source=A,
        t=t,
        density_low=is_density_low(A.size, G.order),
        index2_cosets=_coset_hits(A, 2, 1, t),
        index5_pairs=_coset_hits(A, 5, 2, t),
        gamma3_full=covers_group(G, A, 3),
    )


def coset_intersection_audit(G: GroupSpec) -> int:
    """Largest |C_1 & C_2| over distinct cosets of index-2 subgroups; at most g/4."""
    if G.order % 2:
        raise ConfigError(f"{G} has odd order, so no index-2 subgroups")
    cosets = [c for pi in index_subgroups(G, 2) for c in pi.cosets()]
    best = 0
    for first, second in itertools.combinations(cosets, 2):
        best = max(best, (first & second).size)
    if 4 * best > G.order:
        raise InternalAssertion(f"index-2 cosets of {G} meet in {best} > g/4 elements")
    return best


@dataclass
class CoverResult:
    p: int
    start: int
    window: int
    covered: bool
    witnesses: Dict[int, Tuple[int, List[int]]] = field(default_factory=dict)


def consecutive_cover(p: int, U: Multiset, start: int, with_witnesses: bool = True) -> CoverResult:
    """Check that Sigma over a window of consecutive lengths covers Z_p.

    The window has p lengths: start .. start + p - 1 (3 for Z_3, 5 for Z_5).
    """
    if p not in WINDOWS:
        raise ConfigError(f"consecutive coverage is defined for p in {sorted(WINDOWS)}, got {p}")
    if U.p != p:
        raise ConfigError(f"multiset lives in Z_{U.p}, expected Z_{p}")
    if U.mult[0]:
        raise ConfigError("multiset support contains 0")
    window = WINDOWS[p]
    u = U.total
    if u < window - 1 or not 0 <= start <= u - window + 1:
        raise ConfigError(f"window starting at {start} does not fit u={u}")

    reach = multiset_sigma_layers(U, start + window - 1)
    union = reach[start:start + window].any(axis=0)
    result = CoverResult(p, start, window, bool(union.all()))
    if with_witnesses:
        for residue in range(p):
            for length in range(start, start + window):
                if reach[length, residue]:
                    result.witnesses[residue] = (length, multiset_witness(U, length, residue))
                    break
    return result


@dataclass
class SigmaFullResult:
    hypothesis_met: bool
    asserted_full: bool
    verified_full: Optional[bool]


def sigma_full_predicate(p: int, h: int, U: Multiset, length: int) -> SigmaFullResult:
    """Dense multisets without zero have full length-l subsums.

    Hypothesis: u > (p - 2)h/2 and 3 <= l <= u - p + 1, with p >= 7 prime,
    h >= 4 and every multiplicity at most h.
    """
    if U.p != p:
        raise ConfigError(f"multiset lives in Z_{U.p}, expected Z_{p}")
    if U.mult[0]:
        raise ConfigError("multiset support contains 0")
    if max(U.mult) > h:
        raise ConfigError(f"multiplicity {max(U.mult)} exceeds cap h={h}")
    u = U.total
    met = (isprime(p) and p >= 7 and h >= 4
           and 2 * u > (p - 2) * h and 3 <= length <= u - p + 1)
    verified = multiset_sigma(U, length).is_full() if 0 <= length <= u else None
    if met and not verified:
        raise InternalAssertion(f"dense multiset {U.mult} misses residues at length {length}")
    return SigmaFullResult(bool(met), bool(met), verified)


@dataclass
class InverseReport:
    k: int
    t: int
    size_hypothesis: bool
    density_hypothesis: bool
    covered: bool
    report: ObstructionReport

    @property
    def hypotheses_met(self) -> bool:
        return self.size_hypothesis and self.density_hypothesis

    @property
    def conclusion_holds(self) -> bool:
        """Covered, or structured up to t elements."""
        return self.covered or bool(self.report.index2_cosets or self.report.index5_pairs)


def inverse_scan(G: GroupSpec, A: ElementSet, k: int) -> InverseReport:
    """Structure of a dense set whose k-fold restricted sumset misses an element.

    With t = k - 3, if a - t > 5g/13 and g >= 312|G[2]| + 923 then either
    Gamma_k(A) = G, or A lies in an index-2 coset or in two index-5 cosets
    up to t elements.
    """
    if not 3 <= k <= A.size:
        raise ConfigError(f"need 3 <= k <= |A|, got k={k}, |A|={A.size}")
    t = k - 3
    result = InverseReport(
        k=k,
        t=t,
        size_hypothesis=G.order >= lev_size_threshold(G),
        density_hypothesis=13 * (A.size - t) > 5 * G.order,
        covered=covers_group(G, A, k),
        report=obstruction_scan(G, A, t),
    )
    if result.hypotheses_met and not result.conclusion_holds:
        raise InternalAssertion(f"dense set in {G} escapes every obstruction at k={k}",
                                counterexample=A.to_json())
    return result


@dataclass
class DensityPrediction:
    hypothesis_met: bool
    constant: Tuple[int, int]
    predicts_full: bool


def odd_density_predicate(G: GroupSpec, a: int, k: int) -> DensityPrediction:
    """For odd g >= 1235: a - (k - 3) > c(g)g forces Gamma_k(A) = G."""
    num, den = density_constant(G.order)
    met = G.order % 2 == 1 and G.order >= ODD_MIN_ORDER and 3 <= k <= a
    predicts = met and den * (a - (k - 3)) > num * G.order
    return DensityPrediction(met, (num, den), predicts)


@dataclass
class BoundaryLengths:
    hypothesis_met: bool
    d: int
    low: Tuple[int, int]
    high: Tuple[int, int]

    def contains(self, k: int) -> bool:
        return self.low[0] <= k <= self.low[1] or self.high[0] <= k <= self.high[1]


def boundary_lengths(G: GroupSpec, a: int) -> BoundaryLengths:
    """Lengths near both ends where a set of size a > g/2 is known to cover.

    d = a - ceil(2g/5) + 2; the ranges are [3, d] and [a - d, a - 3].
    """
    g = G.order
    d = a - (-(-2 * g // 5)) + 2
    met = g >= lev_size_threshold(G) and 2 * a > g
    return BoundaryLengths(met, d, (3, d), (a - d, a - 3))
