"""
Elliptic curves y^2 = x^3 + ax + b over prime fields

Chord-tangent group law in affine coordinates, point enumeration by an
x-sweep, the Hasse audit and an explicit isomorphism E(F_p) -> Z_m x Z_n
built from full discrete-log tables.
"""

import re
import math
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from sympy import is_quad_residue, isprime, primefactors, sqrt_mod

from utils import config
from utils.abelian_group import ElementSet, GroupElement, GroupSpec
from utils.errors import ConfigError, InternalAssertion

# Configure logging
logger = logging.getLogger()

# Constants
MIN_FIELD_PRIME = 5
CURVE_GRAMMAR = re.compile(r'^\s*p\s*=\s*(\d+)\s*,\s*a\s*=\s*(-?\d+)\s*,\s*b\s*=\s*(-?\d+)\s*$')
POINT_GRAMMAR = re.compile(r'^\s*\(\s*(-?\d+)\s*,\s*(-?\d+)\s*\)\s*$')
EXHAUSTIVE_HOM_MAX = 200
HOM_SAMPLE_PAIRS = 10_000
THRESHOLD_Q = 47089
THRESHOLD_N = 46656


@dataclass(frozen=True)
class CurvePoint:
    """Affine point, or the point at infinity when x is None."""
    x: Optional[int] = None
    y: Optional[int] = None

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def __str__(self) -> str:
        return 'inf' if self.is_infinity else f"({self.x},{self.y})"


INFINITY = CurvePoint()


@dataclass(frozen=True)
class Curve:
    p: int
    a: int
    b: int

    def __post_init__(self):
        if self.p < MIN_FIELD_PRIME or not isprime(self.p):
            raise ConfigError(f"field size must be a prime >= {MIN_FIELD_PRIME}, got {self.p}")
        object.__setattr__(self, 'a', self.a % self.p)
        object.__setattr__(self, 'b', self.b % self.p)
        if self.discriminant == 0:
            raise ConfigError(f"curve {self} is singular (4a^3 + 27b^2 = 0 mod {self.p})")

    @property
    def discriminant(self) -> int:
        return (4 * self.a ** 3 + 27 * self.b ** 2) % self.p

    def __str__(self) -> str:
        return f"p={self.p},a={self.a},b={self.b}"

    def rhs(self, x: int) -> int:
        return (x * x * x + self.a * x + self.b) % self.p

    def contains(self, P: CurvePoint) -> bool:
        if P.is_infinity:
            return True
        if not (0 <= P.x < self.p and 0 <= P.y < self.p):
            return False
        return (P.y * P.y - self.rhs(P.x)) % self.p == 0

    def check(self, P: CurvePoint) -> CurvePoint:
        if not self.contains(P):
            raise ConfigError(f"point {P} is not on the curve {self}")
        return P

    def point(self, x: int, y: int) -> CurvePoint:
        return self.check(CurvePoint(x % self.p, y % self.p))

    def neg(self, P: CurvePoint) -> CurvePoint:
        self.check(P)
        if P.is_infinity:
            return P
        return CurvePoint(P.x, (-P.y) % self.p)

    def add(self, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
        self.check(P)
        self.check(Q)
        return self._add(P, Q)

    def _add(self, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
        if P.is_infinity:
            return Q
        if Q.is_infinity:
            return P
        p = self.p
        if P.x == Q.x:
            if (P.y + Q.y) % p == 0:
                return INFINITY
            slope = (3 * P.x * P.x + self.a) * pow(2 * P.y, -1, p) % p
        else:
            slope = (Q.y - P.y) * pow(Q.x - P.x, -1, p) % p
        x = (slope * slope - P.x - Q.x) % p
        y = (slope * (P.x - x) - P.y) % p
        return CurvePoint(x, y)

    def sub(self, P: CurvePoint, Q: CurvePoint) -> CurvePoint:
        return self._add(self.check(P), self.neg(Q))

    def mul(self, m: int, P: CurvePoint) -> CurvePoint:
        """[m]P by double-and-add; negative m multiplies -P."""
        self.check(P)
        if m < 0:
            m, P = -m, self.neg(P)
        result, addend = INFINITY, P
        while m:
            if m & 1:
                result = self._add(result, addend)
            addend = self._add(addend, addend)
            m >>= 1
        return result


def build_curve(p: int, a: int, b: int) -> Curve:
    return Curve(int(p), int(a), int(b))


def parse_curve(text: str) -> Curve:
    """Parse 'p=13,a=1,b=1'."""
    match = CURVE_GRAMMAR.match(text or '')
    if not match:
        raise ConfigError(f"curve spec {text!r} does not match p=<prime>,a=<int>,b=<int>")
    return build_curve(*(int(v) for v in match.groups()))


def parse_point(C: Curve, text: str) -> CurvePoint:
    text = text.strip()
    if text.lower() in ('inf', 'o'):
        return INFINITY
    match = POINT_GRAMMAR.match(text)
    if not match:
        raise ConfigError(f"point {text!r} must be 'inf' or '(x,y)'")
    return C.point(*(int(v) for v in match.groups()))


def parse_points(C: Curve, text: Optional[str]) -> List[CurvePoint]:
    """Points separated by ';', e.g. '(0,1);(0,12);inf'."""
    if not text or not text.strip():
        return []
    return [parse_point(C, part) for part in text.split(';') if part.strip()]


def _in_hasse_interval(p: int, N: int) -> bool:
    # |N - p - 1| <= 2 sqrt(p), squared to stay in integers
    return (N - p - 1) ** 2 <= 4 * p


def enumerate_points(C: Curve) -> List[CurvePoint]:
    """All points of E(F_p): infinity first, then by x and y.

    Raises ConfigError above the enumeration cap (SUMSETLAB_CURVE_CAP).
    """
    cap = config.curve_cap()
    if C.p > cap:
        raise ConfigError(f"p={C.p} above the enumeration cap {cap}")
    points = [INFINITY]
    for x in range(C.p):
        r = C.rhs(x)
        if r == 0:
            points.append(CurvePoint(x, 0))
        elif is_quad_residue(r, C.p):
            y = int(sqrt_mod(r, C.p))
            points.extend(CurvePoint(x, v) for v in sorted((y, C.p - y)))
    if not _in_hasse_interval(C.p, len(points)):
        raise InternalAssertion(f"{C} has {len(points)} points, outside the Hasse interval")
    logger.debug("Enumerated %d points on %s", len(points), C)
    return points


def count_points(C: Curve) -> int:
    """Point count from a table of square roots, independent of enumerate_points."""
    p = C.p
    roots = np.zeros(p, dtype=np.int64)
    ys = np.arange(p, dtype=np.int64)
    np.add.at(roots, ys * ys % p, 1)
    xs = np.arange(p, dtype=np.int64)
    rhs = (xs * xs % p * xs + C.a * xs + C.b) % p
    return 1 + int(roots[rhs].sum())


@dataclass
class HasseAudit:
    primes: List[int]
    curves: int
    extremes: Dict[int, Tuple[int, int]]
    violations: List[Dict[str, int]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_json(self) -> Dict[str, Any]:
        return {
            'primes': self.primes,
            'curves': self.curves,
            'extremes': {str(p): list(e) for p, e in self.extremes.items()},
            'violations': self.violations,
            'passed': self.passed,
        }


def hasse_audit(primes: Iterable[int]) -> HasseAudit:
    """Count points on every nonsingular (a, b) over each prime and check the Hasse interval."""
    primes = sorted(set(int(p) for p in primes))
    audit = HasseAudit(primes, 0, {})
    for p in primes:
        if p < MIN_FIELD_PRIME or not isprime(p):
            raise ConfigError(f"audit primes must be primes >= {MIN_FIELD_PRIME}, got {p}")
        low, high = None, None
        for a in range(p):
            for b in range(p):
                if (4 * a ** 3 + 27 * b ** 2) % p == 0:
                    continue
                N = count_points(Curve(p, a, b))
                audit.curves += 1
                low = N if low is None else min(low, N)
                high = N if high is None else max(high, N)
                if not _in_hasse_interval(p, N):
                    audit.violations.append({'p': p, 'a': a, 'b': b, 'N': N})
        audit.extremes[p] = (low, high)
        logger.debug("Hasse audit p=%d: N in [%d, %d]", p, low, high)
    logger.info("Final Summary - Curves: %d, Primes: %d, Violations: %d",
                audit.curves, len(primes), len(audit.violations))
    return audit


@dataclass
class QThreshold:
    q: int
    floor_sqrt: int
    hasse_lower: int
    at_least_threshold: bool
    meets_odd_threshold: bool
    meets_even_threshold: bool

    def to_json(self) -> Dict[str, Any]:
        return dict(self.__dict__)


def q_threshold_check(q: int = THRESHOLD_Q) -> QThreshold:
    """Integer check that q >= 47089 forces |E(F_q)| >= 46656.

    (sqrt(q) - 1)^2 >= (isqrt(q) - 1)^2 >= 216^2. The count then clears
    46319 and, since |E[2]| <= 4, also 624*4 + 1846.
    """
    if q < THRESHOLD_Q:
        raise ConfigError(f"q must be at least {THRESHOLD_Q}, got {q}")
    root = math.isqrt(q)
    lower = (root - 1) ** 2
    return QThreshold(
        q=q,
        floor_sqrt=root,
        hasse_lower=lower,
        at_least_threshold=lower >= THRESHOLD_N,
        meets_odd_threshold=lower >= 46319,
        meets_even_threshold=lower >= 624 * 4 + 1846,
    )


def point_order(C: Curve, P: CurvePoint, N: int) -> int:
    """Order of P, by stripping prime factors of the group order N."""
    order = N
    for q in primefactors(N):
        while order % q == 0 and C.mul(order // q, P).is_infinity:
            order //= q
    if not C.mul(order, P).is_infinity:
        raise InternalAssertion(f"[{N}]{P} is not the identity on {C}")
    return order


@dataclass
class GroupIso:
    """E(F_p) identified with Z_m x Z_n (m | n), or Z_N when cyclic."""
    curve: Curve
    abstract: GroupSpec
    points: Tuple[CurvePoint, ...]
    index: Dict[CurvePoint, int]
    generators: Tuple[CurvePoint, ...]

    @property
    def order(self) -> int:
        return len(self.points)

    @property
    def label(self) -> str:
        return self.abstract.label

    def fwd(self, P: CurvePoint) -> GroupElement:
        try:
            return GroupElement(self.abstract, self.index[P])
        except KeyError:
            raise ConfigError(f"point {P} is not on the curve {self.curve}")

    def back(self, x: GroupElement) -> CurvePoint:
        return self.points[self.abstract.element(x).index]

    def fwd_set(self, points: Iterable[CurvePoint]) -> ElementSet:
        return ElementSet.from_indices(self.abstract, [self.fwd(P).index for P in points])

    def check_homomorphism(self, seed: int = 0) -> None:
        G, C = self.abstract, self.curve
        N = self.order
        if N <= EXHAUSTIVE_HOM_MAX:
            pairs = ((i, j) for i in range(N) for j in range(N))
        else:
            rng = np.random.default_rng(seed)
            pairs = zip(rng.integers(N, size=HOM_SAMPLE_PAIRS).tolist(),
                        rng.integers(N, size=HOM_SAMPLE_PAIRS).tolist())
        for i, j in pairs:
            if self.index[C._add(self.points[i], self.points[j])] != G.add(i, j):
                raise InternalAssertion(f"isomorphism for {C} fails on {self.points[i]} + {self.points[j]}")

    def to_json(self) -> Dict[str, Any]:
        return {
            'curve': str(self.curve), 'N': self.order, 'group': self.label,
            'generators': [str(P) for P in self.generators],
        }


def _multiples(C: Curve, P: CurvePoint, count: int) -> List[CurvePoint]:
    out, current = [], INFINITY
    for _ in range(count):
        out.append(current)
        current = C._add(current, P)
    return out


def group_structure_iso(C: Curve, points: Optional[Sequence[CurvePoint]] = None) -> GroupIso:
    """Explicit isomorphism from E(F_p) onto Z_m x Z_n.

    n is the exponent (largest point order), P1 a point of order n and P2 a
    point of order m = N/n whose multiples avoid <P1>. Index j*n + i is
    [j]P2 + [i]P1.

    Args:
        C: The curve
        points: Its points, if already enumerated

    Returns:
        GroupIso validated on all pairs when N <= 200, on 10^4 sampled pairs otherwise
    """
    points = list(points) if points is not None else enumerate_points(C)
    N = len(points)
    orders = {P: point_order(C, P, N) for P in points}
    n = max(orders.values())
    if any(n % o for o in orders.values()) or N % n:
        raise InternalAssertion(f"point orders on {C} are not consistent with a group of order {N}")
    m = N // n
    P1 = next(P for P in points if orders[P] == n)
    cyclic = _multiples(C, P1, n)

    if m == 1:
        table, generators, G = cyclic, (P1,), GroupSpec((N,))
    else:
        if n % m:
            raise InternalAssertion(f"E({C}) has exponent {n} not divisible by m={m}")
        in_cyclic = set(cyclic)
        P2 = None
        for P in points:
            if orders[P] == m and not any(Q in in_cyclic for Q in _multiples(C, P, m)[1:]):
                P2 = P
                break
        if P2 is None:
            raise InternalAssertion(f"no complement generator of order {m} on {C}")
        table = [C._add(base, Q) for base in _multiples(C, P2, m) for Q in cyclic]
        generators, G = (P2, P1), GroupSpec((m, n))

    index = {P: i for i, P in enumerate(table)}
    if len(index) != N:
        raise InternalAssertion(f"discrete-log table for {C} is not a bijection")
    iso = GroupIso(C, G, tuple(table), index, generators)
    iso.check_homomorphism()
    logger.debug("E(%s) = %s with generators %s", C, G, [str(P) for P in generators])
    return iso
