"""
Finite abelian groups as products of cyclic groups

Elements are mixed-radix residue vectors with a canonical integer index
(C order, so the last factor varies fastest). Subsets are ElementSets:
dense numpy bool vectors over the element indices.
"""

import re
import logging
import itertools
from dataclasses import dataclass
from functools import cached_property, reduce
from operator import mul
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np
from sympy import factorint, isprime, primefactors
from sympy.utilities.iterables import partitions

from utils import config
from utils.errors import ConfigError, InternalAssertion

# Configure logging
logger = logging.getLogger()

# Constants
GROUP_GRAMMAR = re.compile(r'Z\d+(\s*[xX]\s*Z\d+)*')
EXHAUSTIVE_CLOSURE_MAX = 256
EXHAUSTIVE_HOM_MAX = 128
HOM_SAMPLE_PAIRS = 10_000
SPARSE_JSON_MAX = 64


@dataclass(frozen=True)
class GroupSpec:
    """Z_{n_1} x ... x Z_{n_r} with the factor order given at construction."""
    factors: Tuple[int, ...]

    def __post_init__(self):
        if not self.factors:
            raise ConfigError("a group needs at least one cyclic factor")
        for n in self.factors:
            if int(n) < 2:
                raise ConfigError(f"cyclic factor must be at least 2, got {n}")
        object.__setattr__(self, 'factors', tuple(int(n) for n in self.factors))

    @cached_property
    def order(self) -> int:
        return reduce(mul, self.factors, 1)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.factors

    @property
    def rank(self) -> int:
        return len(self.factors)

    @property
    def label(self) -> str:
        return 'x'.join(f'Z{n}' for n in self.factors)

    def __str__(self) -> str:
        return self.label

    @cached_property
    def canonical_factors(self) -> Tuple[int, ...]:
        """Invariant factors m_1 | m_2 | ... | m_s (all m_i >= 2)."""
        powers: Dict[int, List[int]] = {}
        for n in self.factors:
            for prime, exp in factorint(n).items():
                powers.setdefault(prime, []).append(prime ** exp)
        length = max(len(v) for v in powers.values())
        invariant = [1] * length
        for prime_powers in powers.values():
            # Largest power goes to the last invariant factor
            for slot, q in enumerate(sorted(prime_powers, reverse=True)):
                invariant[length - 1 - slot] *= q
        return tuple(invariant)

    def canonical(self) -> 'GroupSpec':
        return GroupSpec(self.canonical_factors)

    def is_isomorphic(self, other: 'GroupSpec') -> bool:
        return self.canonical_factors == other.canonical_factors

    @cached_property
    def coords_table(self) -> np.ndarray:
        """Coordinates of every element, shape (g, r), row i = coords of index i."""
        grid = np.indices(self.factors, dtype=np.int64)
        table = grid.reshape(self.rank, -1).T.copy()
        table.setflags(write=False)
        return table

    def index_of(self, coords: Iterable[int]) -> int:
        coords = tuple(coords)
        if len(coords) != self.rank:
            raise ConfigError(f"expected {self.rank} coordinates for {self.label}")
        coords = tuple(int(c) % n for c, n in zip(coords, self.factors))
        return int(np.ravel_multi_index(coords, self.factors))

    def coords_of(self, index: int) -> Tuple[int, ...]:
        self.check_index(index)
        return tuple(int(c) for c in np.unravel_index(index, self.factors))

    def check_index(self, index: int) -> None:
        if not 0 <= index < self.order:
            raise ConfigError(f"element index {index} out of range for {self.label}")

    def ravel(self, coords: np.ndarray) -> np.ndarray:
        """Vectorized index of coordinate rows (reduced mod the factors)."""
        coords = np.mod(coords, np.array(self.factors, dtype=np.int64))
        return np.ravel_multi_index(tuple(coords.T), self.factors)

    def element(self, value: Union[int, Iterable[int], 'GroupElement']) -> 'GroupElement':
        if isinstance(value, GroupElement):
            if value.group != self:
                raise ConfigError(f"element of {value.group} used in {self}")
            return value
        if isinstance(value, (int, np.integer)):
            index = int(value)
            self.check_index(index)
            return GroupElement(self, index)
        return GroupElement(self, self.index_of(value))

    @property
    def identity(self) -> 'GroupElement':
        return GroupElement(self, 0)

    # Index-level group law
    def add(self, i: int, j: int) -> int:
        ci = self.coords_table[i]
        cj = self.coords_table[j]
        return int(self.ravel((ci + cj)[None, :])[0])

    def neg(self, i: int) -> int:
        return int(self.ravel(-self.coords_table[i][None, :])[0])

    def smul(self, m: int, i: int) -> int:
        return int(self.ravel((int(m) * self.coords_table[i])[None, :])[0])

    def sub(self, i: int, j: int) -> int:
        return self.add(i, self.neg(j))

    def sum_indices(self, indices: Iterable[int]) -> int:
        idx = np.fromiter(indices, dtype=np.int64)
        if idx.size == 0:
            return 0
        total = self.coords_table[idx].sum(axis=0)
        return int(self.ravel(total[None, :])[0])

    def add_all(self, t: int) -> np.ndarray:
        """Index of x + t for every element x, as an array indexed by x."""
        return self.ravel(self.coords_table + self.coords_table[t])


@dataclass(frozen=True)
class GroupElement:
    group: GroupSpec
    index: int

    @property
    def coords(self) -> Tuple[int, ...]:
        return self.group.coords_of(self.index)

    def __add__(self, other: 'GroupElement') -> 'GroupElement':
        return GroupElement(self.group, self.group.add(self.index, other.index))

    def __sub__(self, other: 'GroupElement') -> 'GroupElement':
        return GroupElement(self.group, self.group.sub(self.index, other.index))

    def __neg__(self) -> 'GroupElement':
        return GroupElement(self.group, self.group.neg(self.index))

    def __rmul__(self, m: int) -> 'GroupElement':
        return GroupElement(self.group, self.group.smul(m, self.index))

    def __str__(self) -> str:
        if self.group.rank == 1:
            return str(self.index)
        return '(' + ','.join(str(c) for c in self.coords) + ')'


class ElementSet:
    """Subset of a finite abelian group stored as a bool vector of length g."""
    __slots__ = ('group', 'bits', '_size')

    def __init__(self, group: GroupSpec, bits: np.ndarray):
        bits = np.asarray(bits, dtype=bool).reshape(-1)
        if bits.size != group.order:
            raise ConfigError(f"bit vector of length {bits.size} for group of order {group.order}")
        if bits.flags.writeable:
            bits = bits.copy()
            bits.setflags(write=False)
        self.group = group
        self.bits = bits
        self._size = None

    @classmethod
    def from_indices(cls, group: GroupSpec, indices: Iterable[int]) -> 'ElementSet':
        bits = np.zeros(group.order, dtype=bool)
        for i in indices:
            group.check_index(int(i))
            bits[int(i)] = True
        return cls(group, bits)

    @classmethod
    def from_elements(cls, group: GroupSpec, elements: Iterable[Union[int, Iterable[int], GroupElement]]) -> 'ElementSet':
        return cls.from_indices(group, (group.element(e).index for e in elements))

    @classmethod
    def empty(cls, group: GroupSpec) -> 'ElementSet':
        return cls(group, np.zeros(group.order, dtype=bool))

    @classmethod
    def full(cls, group: GroupSpec) -> 'ElementSet':
        return cls(group, np.ones(group.order, dtype=bool))

    @classmethod
    def singleton(cls, group: GroupSpec, index: int) -> 'ElementSet':
        return cls.from_indices(group, [index])

    @property
    def size(self) -> int:
        if self._size is None:
            self._size = int(np.count_nonzero(self.bits))
        return self._size

    def __len__(self) -> int:
        return self.size

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)

    def __iter__(self) -> Iterator[int]:
        return (int(i) for i in self.indices())

    def __contains__(self, item: Union[int, GroupElement]) -> bool:
        index = item.index if isinstance(item, GroupElement) else int(item)
        return 0 <= index < self.group.order and bool(self.bits[index])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ElementSet):
            return NotImplemented
        return self.group == other.group and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.group, self.bits.tobytes()))

    def __repr__(self) -> str:
        return f"ElementSet({self.group.label}, {self.indices().tolist()})"

    def _check_same(self, other: 'ElementSet') -> None:
        if self.group != other.group:
            raise ConfigError(f"sets over {self.group} and {other.group} cannot be combined")

    def __or__(self, other: 'ElementSet') -> 'ElementSet':
        self._check_same(other)
        return ElementSet(self.group, self.bits | other.bits)

    def __and__(self, other: 'ElementSet') -> 'ElementSet':
        self._check_same(other)
        return ElementSet(self.group, self.bits & other.bits)

    def __sub__(self, other: 'ElementSet') -> 'ElementSet':
        self._check_same(other)
        return ElementSet(self.group, self.bits & ~other.bits)

    def complement(self) -> 'ElementSet':
        return ElementSet(self.group, ~self.bits)

    def issubset(self, other: 'ElementSet') -> bool:
        self._check_same(other)
        return not np.any(self.bits & ~other.bits)

    def is_full(self) -> bool:
        return self.size == self.group.order

    def translate(self, t: Union[int, GroupElement]) -> 'ElementSet':
        """A + t, as a multi-axis roll of the reshaped bit vector."""
        t = self.group.element(t)
        shifted = np.roll(self.bits.reshape(self.group.shape), shift=t.coords,
                          axis=tuple(range(self.group.rank)))
        return ElementSet(self.group, shifted)

    def negate(self) -> 'ElementSet':
        """-A: reverse each axis, then roll by one."""
        axes = tuple(range(self.group.rank))
        flipped = np.flip(self.bits.reshape(self.group.shape), axis=axes)
        return ElementSet(self.group, np.roll(flipped, shift=(1,) * self.group.rank, axis=axes))

    def subtracted_from(self, t: Union[int, GroupElement]) -> 'ElementSet':
        """t - A."""
        return self.negate().translate(t)

    def element_sum(self) -> GroupElement:
        return GroupElement(self.group, self.group.sum_indices(self.indices()))

    def to_json(self) -> Union[List[int], Dict[str, object]]:
        """Sorted index list, or a little-endian hex bitmap above 64 elements."""
        if self.size <= SPARSE_JSON_MAX:
            return self.indices().tolist()
        packed = np.packbits(self.bits, bitorder='little')
        return {'encoding': 'hex', 'g': self.group.order, 'size': self.size,
                'bits': packed.tobytes().hex()}

    @classmethod
    def from_json(cls, group: GroupSpec, payload: Union[List[int], Dict[str, object]]) -> 'ElementSet':
        if isinstance(payload, dict):
            if payload.get('encoding') != 'hex':
                raise ConfigError(f"unknown set encoding {payload.get('encoding')!r}")
            raw = np.frombuffer(bytes.fromhex(str(payload['bits'])), dtype=np.uint8)
            bits = np.unpackbits(raw, bitorder='little')[:group.order]
            return cls(group, bits.astype(bool))
        return cls.from_indices(group, payload)


@dataclass(frozen=True)
class Subgroup:
    parent: GroupSpec
    members: ElementSet

    def __post_init__(self):
        check_subgroup(self.parent, self.members)

    @property
    def size(self) -> int:
        return self.members.size

    @property
    def index(self) -> int:
        return self.parent.order // self.members.size

    def coset(self, t: Union[int, GroupElement]) -> ElementSet:
        return self.members.translate(t)


def check_subgroup(G: GroupSpec, members: ElementSet) -> None:
    """Raise InternalAssertion unless members is a subgroup of G.

    Closure under addition is checked exhaustively for g <= 256; above that
    it is checked on the translates by a fixed sample of members.
    """
    if 0 not in members:
        raise InternalAssertion(f"subgroup of {G} misses the identity")
    if G.order % members.size:
        raise InternalAssertion(f"subgroup size {members.size} does not divide {G.order}")
    if members.negate() != members:
        raise InternalAssertion(f"subgroup of {G} not closed under negation")
    shifts = members.indices()
    if G.order > EXHAUSTIVE_CLOSURE_MAX:
        rng = np.random.default_rng(0)
        shifts = rng.choice(shifts, size=min(len(shifts), 32), replace=False)
    for t in shifts:
        if members.translate(int(t)) != members:
            raise InternalAssertion(f"subgroup of {G} not closed under addition by {int(t)}")


@dataclass(frozen=True)
class QuotientMap:
    """Surjection G -> Z_p given by x -> sum(c_i * x_i) mod p."""
    parent: GroupSpec
    p: int
    coefficients: Tuple[int, ...]

    @cached_property
    def residue(self) -> np.ndarray:
        c = np.array(self.coefficients, dtype=np.int64)
        values = (self.parent.coords_table @ c) % self.p
        values.setflags(write=False)
        return values

    @cached_property
    def kernel(self) -> Subgroup:
        return Subgroup(self.parent, ElementSet(self.parent, self.residue == 0))

    def __call__(self, x: Union[int, GroupElement]) -> int:
        return int(self.residue[self.parent.element(x).index])

    def cosets(self) -> List[ElementSet]:
        """The p cosets, coset r being the preimage of r."""
        return [ElementSet(self.parent, self.residue == r) for r in range(self.p)]

    def fiber(self, A: ElementSet, r: int) -> ElementSet:
        return ElementSet(self.parent, A.bits & (self.residue == r % self.p))

    def fiber_sizes(self, A: ElementSet) -> np.ndarray:
        return np.bincount(self.residue[A.bits], minlength=self.p)

    def check_homomorphism(self, seed: int = 0) -> None:
        g = self.parent.order
        if np.unique(self.residue).size != self.p:
            raise InternalAssertion(f"quotient map {self.coefficients} is not surjective")
        if g <= EXHAUSTIVE_HOM_MAX:
            for x in range(g):
                image = self.residue[self.parent.add_all(x)]
                if np.any(image != (self.residue + self.residue[x]) % self.p):
                    raise InternalAssertion(f"quotient map fails additivity at x={x}")
            return
        rng = np.random.default_rng(seed)
        xs = rng.integers(0, g, size=HOM_SAMPLE_PAIRS)
        ys = rng.integers(0, g, size=HOM_SAMPLE_PAIRS)
        table = self.parent.coords_table
        sums = self.parent.ravel(table[xs] + table[ys])
        if np.any(self.residue[sums] != (self.residue[xs] + self.residue[ys]) % self.p):
            raise InternalAssertion(f"quotient map {self.coefficients} fails sampled additivity")


class GroupStats(NamedTuple):
    order: int
    torsion2: int
    p_min: int


def build_group(spec_text: str) -> GroupSpec:
    """Parse a group spec such as "Z4xZ2".

    Args:
        spec_text: Text matching Z<n>(xZ<n>)*

    Returns:
        GroupSpec with the factors in the order given
    """
    text = spec_text.strip()
    if not GROUP_GRAMMAR.fullmatch(text):
        raise ConfigError(f"cannot parse group spec {spec_text!r}; expected Z<n>(xZ<n>)*")
    G = GroupSpec(tuple(int(n) for n in re.findall(r'Z(\d+)', text)))
    cap = config.group_cap()
    if G.order > cap:
        raise ConfigError(f"group {G} has order {G.order} above the cap {cap}")
    logger.debug("Built group %s (order %d, canonical %s)", G, G.order, G.canonical_factors)
    return G


def group_stats(G: GroupSpec) -> GroupStats:
    torsion2 = 2 ** sum(1 for n in G.factors if n % 2 == 0)
    return GroupStats(G.order, torsion2, min(primefactors(G.order)))


def torsion2_elements(G: GroupSpec) -> ElementSet:
    """G[2] by direct enumeration of 2x = 0."""
    doubled = G.ravel(2 * G.coords_table)
    return ElementSet(G, doubled == 0)


def element_arith(G: GroupSpec, op: str, *args) -> GroupElement:
    """Group law dispatcher: add(x, y), neg(x), smul(m, x), sum(A)."""
    if op == 'add':
        x, y = (G.element(a) for a in args)
        return x + y
    if op == 'neg':
        return -G.element(args[0])
    if op == 'smul':
        m, x = args
        return int(m) * G.element(x)
    if op == 'sum':
        (A,) = args
        if not isinstance(A, ElementSet):
            A = ElementSet.from_elements(G, A)
        return A.element_sum()
    raise ConfigError(f"unknown group operation {op!r}")


def quotients_and_subgroups(G: GroupSpec, d: int) -> List[QuotientMap]:
    """All surjections G -> Z_d up to unit scaling, one per index-d subgroup.

    Args:
        G: The group
        d: A prime dividing g

    Returns:
        List of QuotientMap; each carries its kernel and its d cosets
    """
    if not isprime(d):
        raise ConfigError(f"index {d} is not prime")
    if G.order % d:
        raise ConfigError(f"{d} does not divide the order {G.order} of {G}")
    usable = [i for i, n in enumerate(G.factors) if n % d == 0]
    maps = []
    for values in itertools.product(range(d), repeat=len(usable)):
        nonzero = [v for v in values if v]
        if not nonzero or nonzero[0] != 1:
            continue
        coefficients = [0] * G.rank
        for slot, v in zip(usable, values):
            # d | n_i, so x -> v*x mod d is well defined on Z_{n_i}
            coefficients[slot] = v
        pi = QuotientMap(G, d, tuple(coefficients))
        pi.check_homomorphism()
        maps.append(pi)
    expected = (d ** len(usable) - 1) // (d - 1)
    if len(maps) != expected:
        raise InternalAssertion(f"found {len(maps)} index-{d} subgroups of {G}, expected {expected}")
    logger.debug("Enumerated %d index-%d subgroups of %s", len(maps), d, G)
    return maps


def index_subgroups(G: GroupSpec, d: int) -> List[QuotientMap]:
    """Like quotients_and_subgroups, but empty when d does not divide g."""
    if G.order % d:
        return []
    return quotients_and_subgroups(G, d)


def abelian_groups_of_order(n: int) -> List[GroupSpec]:
    """Every isomorphism type of order n, in invariant-factor form."""
    if n < 2:
        raise ConfigError(f"group order must be at least 2, got {n}")
    per_prime = []
    for prime, exp in sorted(factorint(n).items()):
        shapes = []
        for part in partitions(exp):
            exponents = sorted(itertools.chain.from_iterable([e] * m for e, m in part.items()))
            shapes.append([prime ** e for e in exponents])
        per_prime.append(shapes)
    groups = set()
    for combo in itertools.product(*per_prime):
        factors = [q for powers in combo for q in powers]
        groups.add(GroupSpec(tuple(factors)).canonical())
    return sorted(groups, key=lambda G: G.factors)


def check_in_group(G: GroupSpec, A: ElementSet, name: str = 'set') -> None:
    if A.group != G:
        raise ConfigError(f"{name} lives in {A.group}, expected {G}")


def parse_set(G: GroupSpec, text: Optional[str]) -> ElementSet:
    """Parse "1,2,3" (indices) or "(1,0);(2,1)" (coordinates) into an ElementSet."""
    if not text:
        return ElementSet.empty(G)
    text = text.strip()
    if '(' in text:
        items = re.findall(r'\(([^)]*)\)', text)
        return ElementSet.from_elements(G, (tuple(int(c) for c in item.split(',')) for item in items))
    try:
        return ElementSet.from_indices(G, (int(tok) for tok in text.split(',') if tok.strip()))
    except ValueError:
        raise ConfigError(f"cannot parse element list {text!r}")
