"""
Critical numbers mu_k(G): exact computation at small order and theorem predictions

mu_k(G) is the least m such that every A with |A| >= m has Gamma_k(A) = G.
It equals one plus the size of a largest non-covering set.
"""

import json
import logging
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np
from sympy import primefactors

from utils import config
from utils.abelian_group import (
    ElementSet, GroupSpec, abelian_groups_of_order, group_stats, index_subgroups,
)
from utils.errors import ConfigError, InternalAssertion
from utils.obstructions import (
    ODD_MIN_ORDER, density_constant, lev_size_threshold, obstruction_scan,
)
from utils.sumset_engine import covers_group, gamma, restricted_sumset_table

# Configure logging
logger = logging.getLogger()

# Constants
DEFAULT_BUDGET = 2_000_000
EVEN_SLOPE = 624
EVEN_OFFSET = 1846
THRESHOLD_P3 = 3705
THRESHOLD_P5 = 6175
THRESHOLD_P7 = 46319
RECHECK_SAMPLES = 100
SPOT_LOW_LENGTHS = tuple(range(3, 11))
SPOT_HIGH_OFFSETS = tuple(range(3, 11))
CSV_COLUMNS = ['group', 'g', 'torsion2', 'p_min', 'k', 'mu_exact', 'mu_lower', 'mu_upper', 'certified',
               'even_lower_bound', 'even_bound_applies', 'theorem_range', 'match', 'witness', 'hypothesis_flags']


@dataclass
class SearchResult:
    witness: ElementSet
    missed_target: Optional[int]
    certified: bool
    nodes: int
    seeds: Dict[str, int] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return self.witness.size


def _missed(G: GroupSpec, A: ElementSet, k: int) -> Optional[int]:
    layer = gamma(G, A, k)
    missing = np.flatnonzero(~layer.bits)
    return int(missing[0]) if missing.size else None


def _structured_seeds(G: GroupSpec, k: int) -> Dict[str, ElementSet]:
    """Largest non-covering set found among coset unions and progressions."""
    seeds: Dict[str, ElementSet] = {}
    if k >= 2:
        seeds['short'] = ElementSet.from_indices(G, range(k - 1))
    for d in primefactors(G.order):
        for pi in index_subgroups(G, d):
            for width in (1, 2):
                if width >= d:
                    continue
                for residues in itertools.combinations(range(d), width):
                    candidate = ElementSet(G, np.isin(pi.residue, residues))
                    name = f'index{d}x{width}'
                    if candidate.size > seeds.get(name, ElementSet.empty(G)).size \
                            and not covers_group(G, candidate, k):
                        seeds[name] = candidate
    for axis in range(G.rank):
        step = [0] * G.rank
        step[axis] = 1
        step_index = G.index_of(step)
        members = [0]
        best = None
        while len(members) < G.order:
            nxt = G.add(members[-1], step_index)
            if nxt in members:
                break
            members.append(nxt)
            candidate = ElementSet.from_indices(G, members)
            if covers_group(G, candidate, k):
                break
            best = candidate
        if best is not None:
            seeds[f'progression{axis}'] = best
    return seeds


def max_noncovering_set(G: GroupSpec, k: int, budget: int = DEFAULT_BUDGET) -> SearchResult:
    """Largest A with Gamma_k(A) != G.

    Structured candidates give a lower bound L. Sizes L+1, L+2, ... are then
    scanned exhaustively over sets containing 0 (coverage is translation
    invariant) until a size where every set covers; by monotonicity every
    larger set covers too, which certifies the last non-covering witness.

    Args:
        G: The group
        k: Length, 1 <= k <= g
        budget: Maximum number of candidate sets to test

    Returns:
        SearchResult; certified is False when the budget ran out first
    """
    g = G.order
    if not 1 <= k <= g:
        raise ConfigError(f"need 1 <= k <= g={g}, got {k}")
    full = ElementSet.full(G)
    if not covers_group(G, full, k):
        return SearchResult(full, _missed(G, full, k), True, 1, {'whole-group': g})

    seeds = _structured_seeds(G, k)
    best = max(seeds.values(), key=lambda s: s.size) if seeds else ElementSet.empty(G)
    nodes = 0
    size = best.size + 1
    while size < g:
        found = None
        for rest in itertools.combinations(range(1, g), size - 1):
            nodes += 1
            if nodes > budget:
                logger.info("Budget of %d nodes exhausted at size %d for %s, k=%d", budget, size, G, k)
                return SearchResult(best, _missed(G, best, k), False, nodes,
                                    {name: s.size for name, s in seeds.items()})
            candidate = ElementSet.from_indices(G, (0,) + rest)
            if not covers_group(G, candidate, k):
                found = candidate
                break
        if found is None:
            break
        best = found
        size += 1
    logger.debug("Max non-covering set for %s, k=%d has size %d (%d nodes)", G, k, best.size, nodes)
    return SearchResult(best, _missed(G, best, k), True, nodes,
                        {name: s.size for name, s in seeds.items()})


@dataclass
class Branch:
    name: str
    value: int
    kind: str
    hypotheses: Dict[str, bool]

    @property
    def met(self) -> bool:
        return all(self.hypotheses.values())

    def to_json(self) -> Dict[str, Any]:
        return {'name': self.name, 'value': self.value, 'kind': self.kind,
                'hypotheses': self.hypotheses, 'met': self.met}


@dataclass
class Prediction:
    g: int
    k: int
    p_min: int
    torsion2: int
    branches: List[Branch]
    value: Optional[int]
    kind: Optional[str]
    reason: str
    seam: bool
    thresholds: Dict[str, bool]

    @property
    def branch(self) -> Optional[str]:
        chosen = [b for b in self.branches if b.met and b.value == self.value and b.kind == self.kind]
        return chosen[0].name if chosen else None

    def to_json(self) -> Dict[str, Any]:
        return {
            'g': self.g, 'k': self.k, 'p_min': self.p_min, 'torsion2': self.torsion2,
            'branch': self.branch, 'value': self.value, 'kind': self.kind, 'reason': self.reason,
            'seam': self.seam, 'thresholds': self.thresholds,
            'branches': [b.to_json() for b in self.branches],
        }


def threshold_tests(G: GroupSpec) -> Dict[str, bool]:
    """Every size hypothesis used by the covering theorems, evaluated for G."""
    stats = group_stats(G)
    g = stats.order
    return {
        'g>=624|G[2]|+1846': g >= EVEN_SLOPE * stats.torsion2 + EVEN_OFFSET,
        'g>=3705': g >= THRESHOLD_P3,
        'g>=6175': g >= THRESHOLD_P5,
        'g>=46319': g >= THRESHOLD_P7,
        'g>=3*46319': g >= 3 * THRESHOLD_P7,
        'g>=5*1235': g >= 5 * ODD_MIN_ORDER,
        'g>=1235': g >= ODD_MIN_ORDER,
    }


def theorem_a_hypotheses(G: GroupSpec) -> Dict[str, Any]:
    """Size hypothesis under which every A with |A| > g/2 covers for 3 <= k <= |A| - 3."""
    stats = group_stats(G)
    if stats.p_min == 2:
        threshold = EVEN_SLOPE * stats.torsion2 + EVEN_OFFSET
    elif stats.p_min == 3:
        threshold = THRESHOLD_P3
    elif stats.p_min == 5:
        threshold = THRESHOLD_P5
    else:
        threshold = THRESHOLD_P7
    return {'p_min': stats.p_min, 'threshold': threshold, 'met': stats.order >= threshold}


def theorem_predict(G: GroupSpec, k: int) -> Prediction:
    """Predicted mu_k(G) with every hypothesis evaluated, never assumed.

    Even order gives the exact value g/2 + 1. Odd order gives upper bounds
    with c(g) = 2/5 if 5 | g else 5/13. A value is reported only from
    branches whose hypotheses all hold; the rest are listed as candidates.
    """
    stats = group_stats(G)
    g, p = stats.order, stats.p_min
    tests = threshold_tests(G)
    in_range = 3 <= k and p * (k + 2) <= g
    branches: List[Branch] = []
    seam = False

    if g % 2 == 0:
        branches.append(Branch('even', g // 2 + 1, 'exact', {
            'g>=624|G[2]|+1846': tests['g>=624|G[2]|+1846'],
            '3<=k<=g/2-2': in_range,
        }))
    else:
        num, den = density_constant(g)
        floor_cg = num * g // den
        small = {3: 1, 4: 2, 5: 3}
        if k in small:
            branches.append(Branch(f'odd-k{k}', floor_cg + small[k], 'upper', {
                'g>=1235': tests['g>=1235'],
            }))
        if p == 3:
            branches.append(Branch('odd-p3', floor_cg + 9, 'upper', {
                'g>=3*46319': tests['g>=3*46319'],
                '6<=k<=g/3-2': 6 <= k and 3 * (k + 2) <= g,
            }))
        elif p == 5:
            seam = k in (3, 4)
            branches.append(Branch('odd-p5', floor_cg + 21, 'upper', {
                'g>=5*1235': tests['g>=5*1235'],
                '5<=k<=g/5-2': 5 <= k and 5 * (k + 2) <= g,
            }))
        else:
            branches.append(Branch('odd-p7', floor_cg + 3, 'upper', {
                'g>=1235': tests['g>=1235'],
                '3<=k<=g/p-2': in_range,
            }))

    value, kind, reason = None, None, 'ok'
    met = [b for b in branches if b.met]
    if not in_range:
        reason = f'k={k} outside 3..g/p-2'
    elif not met:
        reason = 'no branch hypotheses met'
    else:
        exact = [b for b in met if b.kind == 'exact']
        if exact:
            value, kind = exact[0].value, 'exact'
        else:
            value, kind = min(b.value for b in met), 'upper'
    return Prediction(g, k, p, stats.torsion2, branches, value, kind, reason, seam, tests)


@dataclass
class CriticalRecord:
    group: GroupSpec
    k: int
    mu_k: Optional[int]
    lower: int
    upper: int
    witness: Optional[ElementSet]
    missed_target: Optional[int]
    certified: bool
    prediction: Prediction
    nodes: int = 0
    even_lower_bound: Optional[int] = None
    theorem_range: Optional[str] = None
    even_bound_applies: Optional[bool] = None

    @property
    def hypotheses_met(self) -> Dict[str, bool]:
        return {b.name: b.met for b in self.prediction.branches}

    @property
    def matches_even_bound(self) -> Optional[bool]:
        if self.mu_k is None or not self.even_bound_applies:
            return None
        return self.mu_k == self.even_lower_bound

    def to_json(self) -> Dict[str, Any]:
        stats = group_stats(self.group)
        return {
            'group': self.group.label,
            'g': stats.order,
            'torsion2': stats.torsion2,
            'p_min': stats.p_min,
            'k': self.k,
            'mu_exact': self.mu_k,
            'mu_lower': self.lower,
            'mu_upper': self.upper,
            'certified': self.certified,
            'witness': self.witness.to_json() if self.witness is not None else None,
            'missed_target': self.missed_target,
            'nodes': self.nodes,
            'even_lower_bound': self.even_lower_bound,
            'theorem_range': self.theorem_range,
            'even_bound_applies': self.even_bound_applies,
            'match': self.matches_even_bound,
            'prediction': self.prediction.to_json(),
        }

    def csv_row(self) -> Dict[str, Any]:
        body = self.to_json()
        row = {key: body[key] for key in CSV_COLUMNS if key in body}
        row['witness'] = ' '.join(str(i) for i in self.witness) if self.witness is not None else ''
        row['hypothesis_flags'] = json.dumps(self.hypotheses_met, sort_keys=True)
        return row


def mu_k_exact(G: GroupSpec, k: int, budget: int = DEFAULT_BUDGET) -> CriticalRecord:
    """Exact mu_k(G) when g is within the exact cap; otherwise an interval.

    The interval is [structured lower bound + 1, theorem upper bound or g].
    """
    g = G.order
    if not 1 <= k <= g:
        raise ConfigError(f"need 1 <= k <= g={g}, got {k}")
    prediction = theorem_predict(G, k)

    if g <= config.exact_cap():
        search = max_noncovering_set(G, k, budget)
        if search.certified:
            mu = search.size + 1
            return CriticalRecord(G, k, mu, mu, mu, search.witness, search.missed_target,
                                  True, prediction, search.nodes)
        return CriticalRecord(G, k, None, search.size + 1, g, search.witness, search.missed_target,
                              False, prediction, search.nodes)

    full = ElementSet.full(G)
    if not covers_group(G, full, k):
        return CriticalRecord(G, k, g + 1, g + 1, g + 1, full, _missed(G, full, k), True, prediction)
    seeds = _structured_seeds(G, k)
    best = max(seeds.values(), key=lambda s: s.size)
    upper = g
    if prediction.value is not None:
        upper = min(upper, prediction.value)
    return CriticalRecord(G, k, None, best.size + 1, upper, best, _missed(G, best, k), False, prediction)


def recheck_record(record: CriticalRecord, samples: int = RECHECK_SAMPLES, seed: int = 0) -> bool:
    """Witness misses its stored target, and random sets of size mu_k all cover."""
    G, k = record.group, record.k
    if record.witness is None or record.missed_target is None:
        return False
    if record.missed_target in gamma(G, record.witness, k):
        return False
    if record.mu_k is None or record.mu_k > G.order:
        return True
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        A = ElementSet.from_indices(G, rng.choice(G.order, size=record.mu_k, replace=False))
        if not covers_group(G, A, k):
            return False
    return True


def _annotate_even(record: CriticalRecord) -> CriticalRecord:
    g = record.group.order
    if g % 2 == 0:
        record.even_lower_bound = g // 2 + 1
        record.even_bound_applies = 3 <= record.k <= g // 2 - 2
        if g // 2 - 2 < 3:
            record.theorem_range = 'empty'
        else:
            record.theorem_range = 'in' if record.even_bound_applies else 'out'
    return record


def _table_entry(args: Tuple[Tuple[int, ...], int, int]) -> CriticalRecord:
    factors, k, budget = args
    return _annotate_even(mu_k_exact(GroupSpec(factors), k, budget))


def dichotomy_table(orders: Iterable[int], ks: Iterable[int], budget: int = DEFAULT_BUDGET,
                    workers: Optional[int] = None) -> List[CriticalRecord]:
    """One record per (isomorphism type, k), in order of (g, factors, k).

    Args:
        orders: Group orders to tabulate
        ks: Lengths; those above g are skipped
        budget: Node budget per record
        workers: Worker processes (default from SUMSETLAB_WORKERS)

    Returns:
        List of CriticalRecord annotated with the even-order lower bound
    """
    cap = config.group_cap()
    ks = list(ks)
    jobs = []
    for g in orders:
        if g > cap:
            raise ConfigError(f"order {g} above the group cap {cap}")
        for G in abelian_groups_of_order(g):
            jobs.extend((G.factors, k, budget) for k in ks if 1 <= k <= g)

    workers = workers or config.workers()
    batch = config.batch_size()
    total_batches = (len(jobs) + batch - 1) // batch
    records: List[CriticalRecord] = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for i in range(0, len(jobs), batch):
            chunk = jobs[i:i + batch]
            logger.info("Processing batch %d/%d (%d records)", i // batch + 1, total_batches, len(chunk))
            if executor is not None:
                records.extend(executor.map(_table_entry, chunk))
            else:
                records.extend(_table_entry(job) for job in chunk)
    finally:
        if executor is not None:
            executor.shutdown()
    certified = sum(1 for r in records if r.certified)
    logger.info("Final Summary - Records: %d, Certified: %d, Intervals: %d",
                len(records), certified, len(records) - certified)
    return records


@dataclass
class SpotCheckResult:
    group: GroupSpec
    seed: int
    size: int
    n_sets: int
    lengths: List[int]
    hypotheses: Dict[str, Any]
    failures: List[Dict[str, Any]]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_json(self) -> Dict[str, Any]:
        return {
            'group': self.group.label, 'seed': self.seed, 'size': self.size,
            'n_sets': self.n_sets, 'lengths': self.lengths,
            'theorem_a': self.hypotheses, 'failures': self.failures, 'passed': self.passed,
        }


def spot_check_theorem_a(G: GroupSpec, n_sets: int, seed: int = 0,
                         low_lengths: Iterable[int] = SPOT_LOW_LENGTHS,
                         high_offsets: Iterable[int] = SPOT_HIGH_OFFSETS) -> SpotCheckResult:
    """Random sets of size g/2 + 1, checked at short lengths and at a - j.

    Short lengths come straight from the table; a - j is read through the
    complement identity from layer j.
    """
    low_lengths, high_offsets = list(low_lengths), list(high_offsets)
    g = G.order
    a = g // 2 + 1
    k_max = max(low_lengths + high_offsets)
    if k_max > a:
        raise ConfigError(f"lengths up to {k_max} need |A| >= {k_max}, but |A| = {a}")
    lengths = sorted(set(low_lengths) | {a - j for j in high_offsets})
    rng = np.random.default_rng(seed)
    failures = []
    for n in range(n_sets):
        A = ElementSet.from_indices(G, rng.choice(g, size=a, replace=False))
        table = restricted_sumset_table(G, A, k_max)
        for k in lengths:
            if not table.layer(k).is_full():
                failures.append({'set': n, 'k': k, 'A': A.to_json()})
        logger.info("Spot check %d/%d on %s done (%d failures so far)", n + 1, n_sets, G, len(failures))
    hypotheses = theorem_a_hypotheses(G)
    if hypotheses['met'] and failures:
        raise InternalAssertion(f"dense set in {G} fails to cover", counterexample=failures[0])
    return SpotCheckResult(G, seed, a, n_sets, lengths, hypotheses, failures)


@dataclass
class LevSamplingResult:
    group: GroupSpec
    seed: int
    n_sets: int
    size_hypothesis: bool
    draws: int
    near_coset_draws: int
    exceptions: List[Dict[str, Any]]

    @property
    def passed(self) -> bool:
        return not self.exceptions

    def to_json(self) -> Dict[str, Any]:
        return {
            'group': self.group.label, 'seed': self.seed, 'n_sets': self.n_sets,
            'size_hypothesis': self.size_hypothesis, 'draws': self.draws,
            'near_coset_draws': self.near_coset_draws, 'exceptions': self.exceptions,
            'passed': self.passed,
        }


def _near_coset_pair(G: GroupSpec, rng: np.random.Generator) -> Optional[ElementSet]:
    """Two index-5 cosets with one member swapped for an outside element."""
    quotients = index_subgroups(G, 5)
    if not quotients:
        return None
    pi = quotients[int(rng.integers(len(quotients)))]
    residues = rng.choice(5, size=2, replace=False)
    bits = np.isin(pi.residue, residues)
    inside, outside = np.flatnonzero(bits), np.flatnonzero(~bits)
    bits[rng.choice(inside)] = False
    bits[rng.choice(outside)] = True
    return ElementSet(G, bits)


def lev_sampling(G: GroupSpec, n_sets: int, seed: int = 0) -> LevSamplingResult:
    """Random dense sets that escape the structured alternatives must have Gamma_3 = G."""
    g = G.order
    rng = np.random.default_rng(seed)
    low = 5 * g // 13 + 1
    high = max(low, g // 2)
    checked, draws, near = 0, 0, 0
    exceptions = []
    while checked < n_sets:
        draws += 1
        A = _near_coset_pair(G, rng) if draws % 2 == 0 else None
        if A is None or 13 * A.size <= 5 * g:
            size = int(rng.integers(low, high + 1))
            A = ElementSet.from_indices(G, rng.choice(g, size=size, replace=False))
        else:
            near += 1
        report = obstruction_scan(G, A, 0)
        if not report.escapes_structure:
            continue
        checked += 1
        if not report.gamma3_full:
            exceptions.append({'A': A.to_json(), 'size': A.size})
        if checked % 100 == 0:
            logger.info("Lev sampling on %s: %d/%d sets checked", G, checked, n_sets)
    return LevSamplingResult(G, seed, n_sets, g >= lev_size_threshold(G), draws, near, exceptions)
