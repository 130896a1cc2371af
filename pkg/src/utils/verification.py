"""
Invariant suite run by `verify` and scripts/verify_suite.py

Each invariant is checked over a family of instances and reports how many
instances it covered. The fast tier uses small families; the full tier runs
the acceptance-scale checks (including the threshold-scale spot checks).
"""

import logging
import itertools
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from sympy import primerange

from utils.abelian_group import (
    ElementSet, GroupSpec, QuotientMap, abelian_groups_of_order, build_group, index_subgroups,
)
from utils.codes import build_code, curve_iso, dual_verdict, mds_search, random_instance
from utils.constructive import best_pair_sum, fiber_lift_represent, pair_padding_represent
from utils.critical_numbers import lev_sampling, mu_k_exact, recheck_record, spot_check_theorem_a
from utils.elliptic import INFINITY, Curve, count_points, enumerate_points, hasse_audit, q_threshold_check
from utils.errors import ConfigError, HypothesisFailure, LabError
from utils.obstructions import WINDOWS, consecutive_cover, coset_intersection_audit, sigma_full_predicate
from utils.sumset_engine import (
    Multiset, SumsetTable, batch_cyclic_layer_sizes, brute_force_sumset, covers_group, dgm_bound,
    dsh_bound, gamma, multiset_sigma, restricted_sumset_table,
)

# Configure logging
logger = logging.getLogger()

# Constants
ORACLE_MAX_SET = 16
DSH_CHUNK = 50_000
PAIR_ORDERS = (21, 25, 27, 33, 35, 39, 45)
SMALL_CRITICAL = {'Z8': 6, 'Z12': 7, 'Z2xZ6': 7}

TIERS: Dict[str, Dict[str, Any]] = {
    'fast': {
        'oracle_max_order': 12, 'oracle_sets': 5,
        'complement_sets': 40,
        'monotone_sets': 40, 'translation_sets': 40,
        'dsh_max_p': 13, 'dsh_max_size': 6,
        'dgm_instances': 500, 'dgm_max_p': 31,
        'even_max_order': 16,
        'coset_max_order': 16,
        'z3_max_u': 8, 'z5_max_u': 7,
        'sigma_max_u': 12,
        'constructive_instances': 40,
        'hasse_max_p': 23,
        'mds_instances': 60, 'mds_max_n': 8,
        'law_max_p': 11,
        'search_primes': (11,), 'search_curves': 1,
        'spot_sets': 0, 'lev_sets': 0,
    },
    'full': {
        'oracle_max_order': 24, 'oracle_sets': 200,
        'complement_sets': 500,
        'monotone_sets': 500, 'translation_sets': 500,
        'dsh_max_p': 31, 'dsh_max_size': 8,
        'dgm_instances': 10_000, 'dgm_max_p': 31,
        'even_max_order': 32,
        'coset_max_order': 64,
        'z3_max_u': 12, 'z5_max_u': 10,
        'sigma_max_u': 14,
        'constructive_instances': 1000,
        'hasse_max_p': 61,
        'mds_instances': 1000, 'mds_max_n': 12,
        'law_max_p': 23,
        'search_primes': (11, 13, 17), 'search_curves': 2,
        'spot_sets': 20, 'lev_sets': 1000,
    },
}


@dataclass
class InvariantResult:
    name: str
    instances: int
    passed: bool
    counterexample: Optional[Any] = None
    skipped: int = 0

    def to_json(self) -> Dict[str, Any]:
        return {'name': self.name, 'instances': self.instances, 'passed': self.passed,
                'skipped': self.skipped, 'counterexample': self.counterexample}


@dataclass
class SuiteReport:
    tier: str
    seed: int
    results: List[InvariantResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> List[InvariantResult]:
        return [r for r in self.results if not r.passed]

    def to_json(self) -> Dict[str, Any]:
        return {'tier': self.tier, 'seed': self.seed, 'passed': self.passed,
                'invariants': [r.to_json() for r in self.results]}


class _Check:
    """Instance counter; fail() stops the invariant with its counterexample."""

    class Failed(Exception):
        pass

    def __init__(self):
        self.instances = 0
        self.skipped = 0
        self.counterexample = None

    def fail(self, counterexample: Any) -> None:
        self.counterexample = counterexample
        raise self.Failed()


def inject_bit_flip(table: SumsetTable, k: int, index: int) -> SumsetTable:
    """Copy of the table with one bit of layer k flipped."""
    layers = list(table.layers)
    bits = layers[k].bits.copy()
    bits[index] = not bits[index]
    layers[k] = ElementSet(table.group, bits)
    return SumsetTable(table.source, table.k_max, layers)


def _random_set(G: GroupSpec, rng: np.random.Generator, low: int, high: int) -> ElementSet:
    size = int(rng.integers(low, high + 1))
    return ElementSet.from_indices(G, rng.choice(G.order, size=size, replace=False))


def check_gamma_oracle(params, rng, check, fault):
    for g in range(2, params['oracle_max_order'] + 1):
        for G in abelian_groups_of_order(g):
            for _ in range(params['oracle_sets']):
                A = _random_set(G, rng, 0, min(g, ORACLE_MAX_SET))
                table = restricted_sumset_table(G, A, A.size)
                for k in range(A.size + 1):
                    if table.layer(k) != brute_force_sumset(G, A, k):
                        check.fail({'group': G.label, 'A': A.to_json(), 'k': k})
                check.instances += 1


def check_complement_identity(params, rng, check, fault):
    groups = [G for g in range(3, 21) for G in abelian_groups_of_order(g)]
    for n in range(params['complement_sets']):
        G = groups[int(rng.integers(len(groups)))]
        A = _random_set(G, rng, 3, min(G.order, 14))
        table = restricted_sumset_table(G, A, A.size)
        if fault and n == 0:
            table = inject_bit_flip(table, 1, int(A.indices()[0]))
        a, abar = A.size, A.element_sum()
        for k in range(a + 1):
            if table.layers[k] != table.layers[a - k].subtracted_from(abar):
                check.fail({'group': G.label, 'A': A.to_json(), 'k': k, 'fault_injected': fault})
        check.instances += 1


def check_monotonicity(params, rng, check, fault):
    """A subset of B gives Gamma_k(A) inside Gamma_k(B), for every k <= |A|."""
    groups = [G for g in range(3, 21) for G in abelian_groups_of_order(g)]
    for _ in range(params['monotone_sets']):
        G = groups[int(rng.integers(len(groups)))]
        B = _random_set(G, rng, 2, min(G.order, 12))
        keep = rng.random(B.size) < 0.6
        A = ElementSet.from_indices(G, B.indices()[keep])
        table_a = restricted_sumset_table(G, A, A.size)
        table_b = restricted_sumset_table(G, B, B.size)
        for k in range(A.size + 1):
            if not table_a.layer(k).issubset(table_b.layer(k)):
                check.fail({'group': G.label, 'A': A.to_json(), 'B': B.to_json(), 'k': k})
        check.instances += 1


def check_translation_covariance(params, rng, check, fault):
    """Gamma_k(A + t) = Gamma_k(A) + k*t."""
    groups = [G for g in range(3, 21) for G in abelian_groups_of_order(g)]
    for _ in range(params['translation_sets']):
        G = groups[int(rng.integers(len(groups)))]
        A = _random_set(G, rng, 1, min(G.order, 12))
        t = int(rng.integers(G.order))
        table = restricted_sumset_table(G, A, A.size)
        shifted = restricted_sumset_table(G, A.translate(t), A.size)
        for k in range(A.size + 1):
            if shifted.layer(k) != table.layer(k).translate(G.smul(k, t)):
                check.fail({'group': G.label, 'A': A.to_json(), 't': t, 'k': k})
        check.instances += 1


def check_dsh_bound(params, rng, check, fault):
    """Exhaustive up to affine maps: every A of size >= 2 is equivalent to one holding 0 and 1."""
    for p in primerange(2, params['dsh_max_p'] + 1):
        for a in range(1, min(p, params['dsh_max_size']) + 1):
            if a == 1:
                rows = np.zeros((1, 1), dtype=np.int64)
            else:
                combos = list(itertools.combinations(range(2, p), a - 2))
                rest = np.array(combos, dtype=np.int64).reshape(len(combos), a - 2)
                rows = np.hstack([np.tile([0, 1], (rest.shape[0], 1)), rest])
            bounds = np.array([dsh_bound(p, a, k) for k in range(1, a // 2 + 1)], dtype=np.int64)
            for start in range(0, rows.shape[0], DSH_CHUNK):
                chunk = rows[start:start + DSH_CHUNK]
                sizes = batch_cyclic_layer_sizes(p, chunk, a // 2)[:, 1:]
                bad = np.flatnonzero((sizes < bounds).any(axis=1))
                if bad.size:
                    check.fail({'p': p, 'A': chunk[bad[0]].tolist()})
                check.instances += chunk.shape[0]


def check_dgm_bound(params, rng, check, fault):
    primes = list(primerange(2, params['dgm_max_p'] + 1))
    for _ in range(params['dgm_instances']):
        p = int(rng.choice(primes))
        u = int(rng.integers(1, 2 * p + 1))
        U = Multiset.from_values(p, rng.integers(p, size=u).tolist())
        length = int(rng.integers(1, u + 1))
        sigma = multiset_sigma(U, length)
        if not sigma.is_full() and sigma.size < dgm_bound(U, length):
            check.fail({'p': p, 'U': list(U.mult), 'length': length})
        check.instances += 1


def check_even_witness(params, rng, check, fault):
    for g in range(4, params['even_max_order'] + 1, 2):
        for G in abelian_groups_of_order(g):
            for pi in index_subgroups(G, 2):
                H = pi.kernel.members
                table = restricted_sumset_table(G, H, H.size // 2)
                for k in range(3, g // 2 - 1):
                    if table.layer(k).is_full():
                        check.fail({'group': G.label, 'subgroup': list(pi.coefficients), 'k': k})
                    check.instances += 1


def check_small_critical(params, rng, check, fault):
    for label, expected in SMALL_CRITICAL.items():
        record = mu_k_exact(build_group(label), 3)
        if not record.certified or record.mu_k != expected or not recheck_record(record):
            check.fail(record.to_json())
        check.instances += 1


def check_coset_intersections(params, rng, check, fault):
    for g in range(2, params['coset_max_order'] + 1, 2):
        for G in abelian_groups_of_order(g):
            coset_intersection_audit(G)
            check.instances += 1


def check_consecutive_cover(params, rng, check, fault):
    for p, max_u in ((3, params['z3_max_u']), (5, params['z5_max_u'])):
        window = WINDOWS[p]
        for u in range(window - 1, max_u + 1):
            for mult in itertools.product(range(u + 1), repeat=p - 1):
                if sum(mult) != u:
                    continue
                U = Multiset(p, (0,) + mult)
                for start in range(u - window + 2):
                    if not consecutive_cover(p, U, start, with_witnesses=False).covered:
                        check.fail({'p': p, 'U': list(U.mult), 'start': start})
                    check.instances += 1


def check_sigma_full(params, rng, check, fault):
    p, h = 7, 4
    for mult in itertools.product(range(h + 1), repeat=p - 1):
        u = sum(mult)
        if 2 * u <= (p - 2) * h or u > params['sigma_max_u']:
            continue
        U = Multiset(p, (0,) + mult)
        for length in range(3, u - p + 2):
            sigma_full_predicate(p, h, U, length)
            check.instances += 1


def _pair_instance(rng, check):
    g = int(rng.choice(PAIR_ORDERS))
    G = GroupSpec((g,))
    A = _random_set(G, rng, g // 2 + 2, g - 2)
    family = best_pair_sum(G, A)
    k_high = min(A.size, 2 * (family.n_pair - 4) + 4)
    if k_high < 3:
        check.skipped += 1
        return
    k = int(rng.integers(3, k_high + 1))
    target = int(rng.integers(g))
    member = target in gamma(G, A, k)
    hypotheses = (covers_group(G, A, 3) and covers_group(G, A, 4)
                  and family.n_pair >= (k - 3) // 2 + 4)
    try:
        witness = pair_padding_represent(G, A, k, target, family)
    except HypothesisFailure:
        if hypotheses and member:
            check.fail({'method': 'pair-padding', 'group': G.label, 'A': A.to_json(), 'k': k, 'target': target})
        check.skipped += 1
        return
    if not member or witness.elements.element_sum().index != target:
        check.fail({'method': 'pair-padding', 'group': G.label, 'A': A.to_json(), 'k': k, 'target': target})
    check.instances += 1


def _fiber_instance(rng, check):
    p = 7
    h = int(rng.integers(4, 7))
    G = GroupSpec((p, h))
    pi = QuotientMap(G, p, (1, 0))
    while True:
        sizes = [h] + rng.integers(0, h + 1, size=p - 1).tolist()
        u = sum(sizes[1:])
        if 2 * u > (p - 2) * h and u - p + 1 >= 3:
            break
    A = ElementSet.from_elements(G, [(r, y) for r, c in enumerate(sizes) for y in range(c)])
    A = A.translate(int(rng.integers(G.order)))
    k = int(rng.integers(3, u - p + 2)) + 3
    target = int(rng.integers(G.order))
    witness = fiber_lift_represent(G, pi, A, k, target)
    if witness.elements.element_sum().index != target or target not in gamma(G, A, k):
        check.fail({'method': 'fiber-lift', 'group': G.label, 'A': A.to_json(), 'k': k, 'target': target})
    check.instances += 1


def check_constructive(params, rng, check, fault):
    for n in range(params['constructive_instances']):
        if n % 2 == 0:
            _pair_instance(rng, check)
        else:
            _fiber_instance(rng, check)


def check_hasse(params, rng, check, fault):
    primes = list(primerange(5, params['hasse_max_p'] + 1))
    audit = hasse_audit(primes)
    if not audit.passed:
        check.fail(audit.violations[0])
    check.instances += audit.curves
    for p in primes:
        for a, b in ((1, 1), (2, 3), (0, 1)):
            if (4 * a ** 3 + 27 * b ** 2) % p == 0:
                continue
            C = Curve(p, a, b)
            if len(enumerate_points(C)) != count_points(C):
                check.fail({'curve': str(C)})
    threshold = q_threshold_check()
    if not (threshold.at_least_threshold and threshold.meets_odd_threshold and threshold.meets_even_threshold):
        check.fail(threshold.to_json())


def check_group_law(params, rng, check, fault):
    """Group axioms and fwd([m]Q) = m*fwd(Q) on small curves."""
    for p in primerange(5, params['law_max_p'] + 1):
        for a, b in ((1, 1), (2, 3), (3, 2)):
            if (4 * a ** 3 + 27 * b ** 2) % p == 0:
                continue
            C = Curve(p, a, b)
            iso = curve_iso(C)
            points, G = iso.points, iso.abstract
            for P in points:
                if C.add(P, INFINITY) != P or not C.add(P, C.neg(P)).is_infinity:
                    check.fail({'curve': str(C), 'point': str(P), 'law': 'identity/inverse'})
                for m in range(iso.order + 1):
                    if iso.fwd(C.mul(m, P)).index != G.smul(m, iso.fwd(P).index):
                        check.fail({'curve': str(C), 'point': str(P), 'm': m, 'law': 'scalar'})
            for P, Q, R in itertools.product(points[:12], repeat=3):
                if C.add(C.add(P, Q), R) != C.add(P, C.add(Q, R)) or C.add(P, Q) != C.add(Q, P):
                    check.fail({'curve': str(C), 'points': [str(P), str(Q), str(R)], 'law': 'assoc/comm'})
            check.instances += 1


def check_mds_equivalence(params, rng, check, fault):
    for _ in range(params['mds_instances']):
        code, iso = random_instance(rng, list(primerange(5, 62)), params['mds_max_n'])
        verdict = dual_verdict(code, iso)
        if not verdict.agree:
            check.fail({'code': code.to_json(), 'verdict': verdict.to_json()})
        C, Q = code.curve, code.center
        moved = build_code(C, [C.sub(P, Q) for P in code.eval_points], code.k, INFINITY)
        if not np.array_equal(np.asarray(moved.gen_matrix), np.asarray(code.gen_matrix)):
            check.fail({'code': code.to_json(), 'law': 'translation'})
        check.instances += 1


def check_mds_search(params, rng, check, fault):
    records = mds_search(params['search_primes'], budget=300, seed=int(rng.integers(1 << 31)),
                         curves_per_prime=params['search_curves'], workers=1)
    for record in records:
        if record.N % 2 == 0 and record.N >= 12 and record.size < record.N // 2:
            check.fail(record.to_json())
        check.instances += 1


def check_theorem_a_spot(params, rng, check, fault):
    if not params['spot_sets']:
        return
    result = spot_check_theorem_a(GroupSpec((46320,)), params['spot_sets'], seed=int(rng.integers(1 << 31)))
    if not result.passed:
        check.fail(result.failures[0])
    check.instances += result.n_sets * len(result.lengths)


def check_lev_sampling(params, rng, check, fault):
    if not params['lev_sets']:
        return
    result = lev_sampling(GroupSpec((1235,)), params['lev_sets'], seed=int(rng.integers(1 << 31)))
    if not result.passed:
        check.fail(result.exceptions[0])
    check.instances += result.n_sets


INVARIANTS: List[Tuple[str, Callable]] = [
    ('gamma-oracle', check_gamma_oracle),
    ('complement-identity', check_complement_identity),
    ('dsh-bound', check_dsh_bound),
    ('dgm-bound', check_dgm_bound),
    ('even-witness', check_even_witness),
    ('small-critical-numbers', check_small_critical),
    ('coset-intersections', check_coset_intersections),
    ('consecutive-cover', check_consecutive_cover),
    ('sigma-full', check_sigma_full),
    ('constructive-witnesses', check_constructive),
    ('hasse', check_hasse),
    ('group-law', check_group_law),
    ('mds-equivalence', check_mds_equivalence),
    ('mds-search-even', check_mds_search),
    ('theorem-a-spot', check_theorem_a_spot),
    ('lev-sampling', check_lev_sampling),
    ('monotonicity', check_monotonicity),
    ('translation-covariance', check_translation_covariance),
]


def verify_suite(tier: str = 'fast', seed: int = 0, inject_fault: bool = False,
                 only: Optional[List[str]] = None) -> SuiteReport:
    """Run every invariant of the tier and report instance counts.

    Args:
        tier: 'fast' or 'full'
        seed: Base seed; each invariant draws from its own stream
        inject_fault: Flip one sumset-table bit inside the complement check
        only: Restrict to these invariant names

    Returns:
        SuiteReport; a failed invariant carries its first counterexample
    """
    if tier not in TIERS:
        raise ConfigError(f"tier must be one of {sorted(TIERS)}, got {tier!r}")
    names = [name for name, _ in INVARIANTS]
    if only:
        unknown = sorted(set(only) - set(names))
        if unknown:
            raise ConfigError(f"unknown invariants: {unknown}")
    params = TIERS[tier]
    report = SuiteReport(tier, seed)
    for position, (name, fn) in enumerate(INVARIANTS):
        if only and name not in only:
            continue
        rng = np.random.default_rng([seed, position])
        check = _Check()
        try:
            fn(params, rng, check, inject_fault)
            passed = True
        except _Check.Failed:
            passed = False
        except LabError as e:
            logger.error("Invariant %s raised %s", name, e)
            passed = False
            check.counterexample = getattr(e, 'counterexample', None) or e.to_body()
        result = InvariantResult(name, check.instances, passed, check.counterexample, check.skipped)
        report.results.append(result)
        logger.info("Invariant %s: %s (%d instances, %d skipped)",
                    name, 'pass' if passed else 'FAIL', result.instances, result.skipped)
    logger.info("Final Summary - Invariants: %d, Passed: %d, Failed: %d",
                len(report.results), len(report.results) - len(report.failures), len(report.failures))
    return report
