"""
Evaluation codes on elliptic curves and their MDS property

A code is C_L(kQ, P): the evaluations of L(kQ) at distinct points P_1..P_n
off Q. It is checked for MDS two ways, by k x k minors over F_p and by the
sumset criterion (not MDS iff [k]Q lies in Gamma_k(P)), and the two verdicts
must agree.
"""

import math
import logging
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import galois
import numpy as np
from sympy import isprime

from utils import config
from utils.abelian_group import ElementSet, GroupSpec, index_subgroups
from utils.critical_numbers import theorem_a_hypotheses
from utils.elliptic import INFINITY, Curve, CurvePoint, GroupIso, group_structure_iso
from utils.errors import ConfigError, InternalAssertion
from utils.sumset_engine import gamma, restricted_sumset_table

# Configure logging
logger = logging.getLogger()

# Constants
ORACLE_MAX_MESSAGES = 100_000
EXHAUSTIVE_SEARCH_MAX = 12
MIN_SEARCH_SIZE = 6
RANK_VERIFY_MAX_MINORS = 20_000
DEFAULT_SEARCH_BUDGET = 2_000
DEFAULT_CURVES_PER_PRIME = 3
SWAP_PATIENCE = 200
SEARCH_CSV_COLUMNS = ['q', 'a', 'b', 'N', 'parity', 'group', 'size', 'k',
                      'gap_half', 'gap_general', 'certified', 'partial']


@lru_cache(maxsize=None)
def field(p: int):
    """The prime field F_p as a galois FieldArray class."""
    return galois.GF(p)


@lru_cache(maxsize=None)
def curve_iso(C: Curve) -> GroupIso:
    return group_structure_iso(C)


@dataclass(frozen=True)
class DivisorSpec:
    """Formal sum of points sum n_i Q_i."""
    terms: Tuple[Tuple[CurvePoint, int], ...]

    @classmethod
    def single(cls, Q: CurvePoint, k: int) -> 'DivisorSpec':
        return cls(((Q, int(k)),))

    @property
    def degree(self) -> int:
        return sum(n for _, n in self.terms)

    @property
    def support(self) -> List[CurvePoint]:
        return [Q for Q, n in self.terms if n != 0]

    def to_json(self) -> List[List[Any]]:
        return [[str(Q), n] for Q, n in self.terms]


def divisor_point(C: Curve, D: DivisorSpec) -> CurvePoint:
    """Q_D = sum over the group law of [n_i]Q_i."""
    total = INFINITY
    for Q, n in D.terms:
        total = C.add(total, C.mul(n, Q))
    return total


def riemann_roch_basis(k: int) -> List[Tuple[int, int]]:
    """Exponents (i, j) of the monomials x^i y^j spanning L(kO), by pole order 2i + 3j."""
    if k < 1:
        raise ConfigError(f"divisor degree must be at least 1, got {k}")
    basis = [(i, j) for j in (0, 1) for i in range(k // 2 + 1) if 2 * i + 3 * j <= k]
    return sorted(basis, key=lambda e: 2 * e[0] + 3 * e[1])


@dataclass(frozen=True, eq=False)
class CodeInstance:
    curve: Curve
    eval_points: Tuple[CurvePoint, ...]
    divisor: DivisorSpec
    basis: Tuple[Tuple[int, int], ...]
    gen_matrix: galois.FieldArray

    @property
    def n(self) -> int:
        return len(self.eval_points)

    @property
    def k(self) -> int:
        return self.divisor.degree

    @property
    def center(self) -> CurvePoint:
        return self.divisor.terms[0][0]

    def to_json(self) -> Dict[str, Any]:
        return {
            'q': self.curve.p, 'a': self.curve.a, 'b': self.curve.b,
            'P': [str(P) for P in self.eval_points], 'Q': str(self.center),
            'n': self.n, 'k': self.k,
        }


def build_code(C: Curve, P: Sequence[CurvePoint], k: int, Q: CurvePoint = INFINITY) -> CodeInstance:
    """Generator matrix of C_L(kQ, P).

    Row r evaluates the r-th basis monomial of L(kO) at P_i - Q, which spans
    L(kQ) after translation by Q.

    Args:
        C: The curve
        P: Distinct evaluation points, none equal to Q
        k: Divisor degree, 0 < k < n
        Q: Centre of the divisor (default: the point at infinity)

    Returns:
        CodeInstance whose k x n generator matrix has rank k
    """
    P = tuple(C.check(point) for point in P)
    C.check(Q)
    n = len(P)
    if len(set(P)) != n:
        raise ConfigError("evaluation points must be distinct")
    if Q in P:
        raise ConfigError(f"divisor support {Q} meets the evaluation points")
    if not 0 < k < n:
        raise ConfigError(f"need 0 < k < n, got k={k}, n={n}")

    basis = riemann_roch_basis(k)
    p = C.p
    translated = [C.sub(point, Q) for point in P]
    rows = [[pow(T.x, i, p) * pow(T.y, j, p) % p for T in translated] for i, j in basis]
    GF = field(p)
    matrix = GF(np.array(rows, dtype=np.int64))
    rank = int(np.linalg.matrix_rank(matrix))
    if rank != k:
        raise InternalAssertion(f"generator matrix has rank {rank}, expected {k}",
                                counterexample={'curve': str(C), 'P': [str(x) for x in P], 'k': k, 'Q': str(Q)})
    return CodeInstance(C, P, DivisorSpec.single(Q, k), tuple(basis), matrix)


def is_mds_rank(code: CodeInstance) -> bool:
    """MDS iff every k x k minor of the generator matrix is nonsingular."""
    M = code.gen_matrix
    for columns in itertools.combinations(range(code.n), code.k):
        if np.linalg.det(M[:, list(columns)]) == 0:
            return False
    return True


def is_mds_sumset(code: CodeInstance, iso: GroupIso) -> bool:
    """MDS iff Q_D is not a sum of k distinct evaluation points."""
    if iso.curve != code.curve:
        raise ConfigError(f"isomorphism is for {iso.curve}, code lives on {code.curve}")
    target = iso.fwd(divisor_point(code.curve, code.divisor)).index
    points = iso.fwd_set(code.eval_points)
    return target not in gamma(iso.abstract, points, code.k)


@dataclass
class MinDistance:
    d: int
    singleton: int

    @property
    def mds(self) -> bool:
        return self.d == self.singleton


def min_distance_oracle(code: CodeInstance) -> MinDistance:
    """Minimum distance by encoding all p^k messages."""
    p, k, n = code.curve.p, code.k, code.n
    if p ** k > ORACLE_MAX_MESSAGES:
        raise ConfigError(f"p^k = {p ** k} messages exceed the oracle limit {ORACLE_MAX_MESSAGES}")
    GF = field(p)
    messages = GF(np.array(list(itertools.product(range(p), repeat=k)), dtype=np.int64))
    codewords = messages @ code.gen_matrix
    weights = np.count_nonzero(np.asarray(codewords), axis=1)
    # row 0 is the zero message
    return MinDistance(int(weights[1:].min()), n - k + 1)


@dataclass
class MDSVerdict:
    rank: bool
    sumset: bool
    oracle: Optional[bool] = None

    @property
    def agree(self) -> bool:
        return self.rank == self.sumset and self.oracle in (None, self.rank)

    def to_json(self) -> Dict[str, Any]:
        return {'mds': self.rank, 'rank': self.rank, 'sumset': self.sumset,
                'weight_oracle': self.oracle, 'methods_agree': self.agree}


def dual_verdict(code: CodeInstance, iso: GroupIso, with_oracle: bool = True) -> MDSVerdict:
    verdict = MDSVerdict(is_mds_rank(code), is_mds_sumset(code, iso))
    if with_oracle and code.curve.p ** code.k <= ORACLE_MAX_MESSAGES:
        verdict.oracle = min_distance_oracle(code).mds
    return verdict


def random_instance(rng: np.random.Generator, primes: Sequence[int], max_n: int = 12) -> Tuple[CodeInstance, GroupIso]:
    """A random code C_L(kQ, P) with 0 < k < n <= max_n over one of the primes."""
    while True:
        p = int(rng.choice(primes))
        a, b = (int(v) for v in rng.integers(p, size=2))
        if (4 * a ** 3 + 27 * b ** 2) % p == 0:
            continue
        iso = curve_iso(Curve(p, a, b))
        if iso.order >= 3:
            break
    Q = iso.points[int(rng.integers(iso.order))]
    others = [P for P in iso.points if P != Q]
    n = int(rng.integers(2, min(max_n, len(others)) + 1))
    chosen = [others[i] for i in rng.choice(len(others), size=n, replace=False)]
    k = int(rng.integers(1, n))
    return build_code(iso.curve, chosen, k, Q), iso


def hr_general_bound(N: int) -> float:
    """Earlier general bound on the length of an MDS elliptic code: (|E| + 5)/2."""
    return (N + 5) / 2


def _feasible_length(G: GroupSpec, P: ElementSet, q: int) -> Optional[int]:
    """Least k in [3, |P| - 3] with k*q outside Gamma_k(P), or None."""
    n = P.size
    if n < MIN_SEARCH_SIZE:
        return None
    table = restricted_sumset_table(G, P, n // 2)
    for k in range(3, n - 2):
        if G.smul(k, q) not in table.layer(k):
            return k
    return None


@dataclass
class SearchRecord:
    curve: Curve
    group: GroupSpec
    N: int
    points: Tuple[CurvePoint, ...]
    center: Optional[CurvePoint]
    k: Optional[int]
    checks: int
    certified: bool
    partial: bool
    rank_verified: Optional[bool] = None

    @property
    def size(self) -> int:
        return len(self.points)

    def to_json(self) -> Dict[str, Any]:
        return {
            'q': self.curve.p, 'a': self.curve.a, 'b': self.curve.b,
            'N': self.N, 'group': self.group.label, 'parity': 'even' if self.N % 2 == 0 else 'odd',
            'P': [str(P) for P in self.points], 'Q': str(self.center) if self.center is not None else None,
            'k': self.k, 'size': self.size, 'mds': self.k is not None,
            'method': 'both' if self.rank_verified else 'sumset',
            'gap_half': self.N / 2 - self.size,
            'gap_general': hr_general_bound(self.N) - self.size,
            'checks': self.checks, 'certified': self.certified, 'partial': self.partial,
            'theorem_a': theorem_a_hypotheses(self.group),
        }

    def csv_row(self) -> Dict[str, Any]:
        body = self.to_json()
        return {key: body[key] for key in SEARCH_CSV_COLUMNS}


class _Search:
    """Greedy growth and 2-swap local search in the abstract group."""

    def __init__(self, G: GroupSpec, budget: int, rng: np.random.Generator):
        self.G = G
        self.budget = budget
        self.rng = rng
        self.checks = 0
        self.best: Tuple[List[int], Optional[int], Optional[int]] = ([], None, None)

    @property
    def exhausted(self) -> bool:
        return self.checks >= self.budget

    def feasible(self, members: Iterable[int], q: int) -> Optional[int]:
        self.checks += 1
        return _feasible_length(self.G, ElementSet.from_indices(self.G, members), q)

    def offer(self, members: List[int], q: int, k: int) -> None:
        if len(members) > len(self.best[0]):
            self.best = (sorted(members), q, k)

    def grow(self, start: List[int], q: int) -> List[int]:
        members = list(start)
        for x in self.rng.permutation(self.G.order).tolist():
            if self.exhausted:
                break
            if x == q or x in members:
                continue
            if len(members) + 1 < MIN_SEARCH_SIZE:
                members.append(x)
                continue
            k = self.feasible(members + [x], q)
            if k is not None:
                members.append(x)
                self.offer(members, q, k)
        return members

    def swap(self, members: List[int], q: int) -> List[int]:
        idle = 0
        while idle < SWAP_PATIENCE and not self.exhausted:
            idle += 1
            outside = [x for x in range(self.G.order) if x != q and x not in members]
            if len(outside) < 2 or not members:
                break
            drop = members[int(self.rng.integers(len(members)))]
            pair = self.rng.choice(outside, size=2, replace=False).tolist()
            trial = [x for x in members if x != drop] + pair
            k = self.feasible(trial, q)
            if k is not None:
                members = trial
                self.offer(members, q, k)
                idle = 0
        return members


def _seed_sets(G: GroupSpec, rng: np.random.Generator) -> List[Tuple[List[int], int]]:
    """(start set, centre) pairs: an index-2 subgroup with an outside centre, then random starts."""
    seeds = []
    for pi in index_subgroups(G, 2)[:1]:
        H = pi.kernel.members.indices().tolist()
        outside = int(np.flatnonzero(pi.residue == 1)[0])
        seeds.append((H, outside))
    seeds.append(([], 0))
    seeds.append(([], int(rng.integers(G.order))))
    return seeds


def _exhaustive_search(G: GroupSpec) -> Tuple[List[int], Optional[int], Optional[int], int]:
    best: Tuple[List[int], Optional[int], Optional[int]] = ([], None, None)
    checks = 0
    for q in range(G.order):
        others = [x for x in range(G.order) if x != q]
        for size in range(len(others), max(MIN_SEARCH_SIZE, len(best[0]) + 1) - 1, -1):
            found = None
            for members in itertools.combinations(others, size):
                checks += 1
                k = _feasible_length(G, ElementSet.from_indices(G, members), q)
                if k is not None:
                    found = (list(members), q, k)
                    break
            if found:
                best = found
                break
    return best[0], best[1], best[2], checks


def search_curve(C: Curve, budget: int = DEFAULT_SEARCH_BUDGET, seed: int = 0) -> SearchRecord:
    """Largest evaluation set found on one curve that supports an MDS code with 3 <= k <= |P| - 3.

    Curves with at most 12 points are searched exhaustively and the record is
    certified. Otherwise the search is greedy with 2-swap moves, and the
    record is flagged partial when the check budget ran out.
    """
    iso = curve_iso(C)
    G, N = iso.abstract, iso.order
    rng = np.random.default_rng(seed)
    if N <= EXHAUSTIVE_SEARCH_MAX:
        members, q, k, checks = _exhaustive_search(G)
        certified, partial = True, False
    else:
        search = _Search(G, budget, rng)
        for start, centre in _seed_sets(G, rng):
            if search.exhausted:
                break
            k = search.feasible(start, centre) if start else None
            if k is not None:
                search.offer(start, centre, k)
            members = search.grow(start if k is not None else [], centre)
            search.swap(members, centre)
        members, q, k = search.best
        checks, certified, partial = search.checks, False, search.exhausted

    points = tuple(iso.back(G.element(x)) for x in members)
    center = iso.back(G.element(q)) if q is not None else None
    record = SearchRecord(C, G, N, points, center, k, checks, certified, partial)
    if k is not None:
        code = build_code(C, points, k, center)
        if not is_mds_sumset(code, iso):
            raise InternalAssertion(f"search record on {C} fails the sumset criterion")
        if math.comb(code.n, k) <= RANK_VERIFY_MAX_MINORS:
            record.rank_verified = is_mds_rank(code)
            if not record.rank_verified:
                raise InternalAssertion(f"search record on {C} fails the minor check", counterexample=code.to_json())
    logger.debug("Curve %s (N=%d): best |P|=%d with k=%s", C, N, record.size, k)
    return record


def _search_job(args: Tuple[int, int, int, int, int]) -> SearchRecord:
    p, a, b, budget, seed = args
    return search_curve(Curve(p, a, b), budget, seed)


def curves_over(p: int, limit: Optional[int], rng: np.random.Generator) -> List[Tuple[int, int]]:
    """Nonsingular (a, b) over F_p: all of them, or a sorted sample of size limit."""
    pairs = [(a, b) for a in range(p) for b in range(p) if (4 * a ** 3 + 27 * b ** 2) % p]
    if limit is None or limit >= len(pairs):
        return pairs
    picked = rng.choice(len(pairs), size=limit, replace=False)
    return [pairs[i] for i in sorted(picked.tolist())]


def mds_search(primes: Iterable[int], budget: int = DEFAULT_SEARCH_BUDGET, seed: int = 0,
               curves_per_prime: Optional[int] = DEFAULT_CURVES_PER_PRIME,
               workers: Optional[int] = None) -> List[SearchRecord]:
    """Search every selected curve over each prime for long MDS evaluation sets.

    Args:
        primes: Field primes (each within the enumeration cap)
        budget: Feasibility checks per curve
        seed: Seed for curve sampling and the local search
        curves_per_prime: Curves sampled per prime (None for all)
        workers: Worker processes (default from SUMSETLAB_WORKERS)

    Returns:
        One SearchRecord per curve, ordered by (p, a, b)
    """
    cap = config.curve_cap()
    rng = np.random.default_rng(seed)
    jobs = []
    for p in sorted(set(int(p) for p in primes)):
        if p > cap:
            raise ConfigError(f"p={p} above the enumeration cap {cap}")
        if p < 5 or not isprime(p):
            raise ConfigError(f"search primes must be primes >= 5, got {p}")
        jobs.extend((p, a, b, budget, seed) for a, b in curves_over(p, curves_per_prime, rng))

    workers = workers or config.workers()
    batch = config.batch_size()
    total_batches = (len(jobs) + batch - 1) // batch
    records: List[SearchRecord] = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for i in range(0, len(jobs), batch):
            chunk = jobs[i:i + batch]
            logger.info("Processing batch %d/%d (%d curves)", i // batch + 1, total_batches, len(chunk))
            if executor is not None:
                records.extend(executor.map(_search_job, chunk))
            else:
                records.extend(_search_job(job) for job in chunk)
    finally:
        if executor is not None:
            executor.shutdown()
    partial = sum(1 for r in records if r.partial)
    logger.info("Final Summary - Curves: %d, Certified: %d, Partial: %d",
                len(records), sum(1 for r in records if r.certified), partial)
    return records
