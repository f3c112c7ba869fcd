"""Exact set algebra on [0, 1) and on finite atom spaces.

Measurable sets on the unit interval are finite unions of half-open
intervals with dyadic endpoints, kept in a canonical (sorted, maximally
merged) form so that equality of values is equality of point sets.  On a
finite space of ``n`` atoms a set is a membership vector.

The countable generating family used by the infimum searches is
enumerated implicitly: members are ranked combinatorially, so families far
too large to list (every union of 256 cells, say) still have a well
defined, reproducible order and a cheap ``item(n)``/``index_of(set)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

from .errors import InputError

ZERO = Fraction(0)
ONE = Fraction(1)

# refuse to materialize families larger than this
MATERIALIZE_LIMIT = 1_000_000


def as_fraction(value, field: str = "value") -> Fraction:
    """Parse ``value`` as an exact fraction; strings like ``"-3/8"`` are accepted."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f"{field}: expected a fraction, got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip().replace("−", "-")
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"{field}: cannot parse {value!r} as a fraction ({exc})") from None
    raise InputError(f"{field}: expected a fraction string, got {type(value).__name__}")


def dyadic_level(x: Fraction) -> int:
    """Smallest ``L`` with ``x * 2**L`` an integer; raises for non-dyadic ``x``."""
    den = x.denominator
    if den & (den - 1):
        raise InputError(f"{x} is not a dyadic rational")
    return den.bit_length() - 1


def _cell_boundary(value: Fraction, n: int) -> int:
    scaled = value * n
    if scaled.denominator != 1:
        raise InputError(f"endpoint {value} does not lie on the 1/{n} grid")
    return scaled.numerator


# ---------------------------------------------------------------------------
# interval unions on [0, 1)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalUnionSet:
    """Canonical finite union of half-open intervals ``[a, b)`` inside ``[0, 1)``."""

    intervals: tuple[tuple[Fraction, Fraction], ...] = ()

    def __post_init__(self):
        prev_end = None
        for a, b in self.intervals:
            if not (isinstance(a, Fraction) and isinstance(b, Fraction)):
                raise InputError("interval endpoints must be Fractions; use canonicalize()")
            if not (ZERO <= a < b <= ONE):
                raise InputError(f"bad interval [{a}, {b})")
            if prev_end is not None and a <= prev_end:
                raise InputError("intervals are not in canonical form; use canonicalize()")
            dyadic_level(a)
            dyadic_level(b)
            prev_end = b

    @classmethod
    def _trusted(cls, intervals) -> "IntervalUnionSet":
        obj = object.__new__(cls)
        object.__setattr__(obj, "intervals", tuple(intervals))
        return obj

    # -- constructors ------------------------------------------------------

    @classmethod
    def empty(cls) -> "IntervalUnionSet":
        return EMPTY

    @classmethod
    def full(cls) -> "IntervalUnionSet":
        return FULL

    @classmethod
    def cell(cls, index: int, level: int) -> "IntervalUnionSet":
        n = 1 << level
        if not 0 <= index < n:
            raise InputError(f"cell {index} out of range for level {level}")
        return cls._trusted(((Fraction(index, n), Fraction(index + 1, n)),))

    @classmethod
    def from_boundaries(cls, bounds: Sequence[int], level: int) -> "IntervalUnionSet":
        """Build from strictly increasing cell boundaries ``a1 < b1 < a2 < ...``."""
        n = 1 << level
        return cls._trusted(
            (Fraction(bounds[i], n), Fraction(bounds[i + 1], n))
            for i in range(0, len(bounds), 2)
        )

    @classmethod
    def from_mask(cls, mask: int, level: int) -> "IntervalUnionSet":
        """Inverse of :meth:`to_mask`: bit ``i`` set means cell ``i`` is included."""
        n = 1 << level
        out = []
        i = 0
        while mask:
            low = (mask & -mask).bit_length() - 1
            mask >>= low
            i += low
            run = (~mask & (mask + 1)).bit_length() - 1
            out.append((Fraction(i, n), Fraction(i + run, n)))
            mask >>= run
            i += run
        return cls._trusted(out)

    @classmethod
    def from_cells(cls, members: Iterable[bool], level: int) -> "IntervalUnionSet":
        mask = 0
        for i, flag in enumerate(members):
            if flag:
                mask |= 1 << i
        return cls.from_mask(mask, level)

    # -- views -------------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def components(self) -> int:
        return len(self.intervals)

    @property
    def level(self) -> int:
        """Finest dyadic level among the endpoints (0 for the empty set)."""
        lv = 0
        for a, b in self.intervals:
            lv = max(lv, dyadic_level(a), dyadic_level(b))
        return lv

    def boundaries(self, level: int) -> tuple[int, ...]:
        n = 1 << level
        out = []
        for a, b in self.intervals:
            out.append(_cell_boundary(a, n))
            out.append(_cell_boundary(b, n))
        return tuple(out)

    def to_mask(self, level: int) -> int:
        bounds = self.boundaries(level)
        mask = 0
        for i in range(0, len(bounds), 2):
            mask |= (1 << bounds[i + 1]) - (1 << bounds[i])
        return mask

    def cells(self, level: int) -> tuple[bool, ...]:
        mask = self.to_mask(level)
        return tuple(bool(mask >> i & 1) for i in range(1 << level))

    def contains(self, x) -> bool:
        x = as_fraction(x)
        return any(a <= x < b for a, b in self.intervals)

    __contains__ = contains

    def lebesgue(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), ZERO)

    # -- algebra -----------------------------------------------------------

    def complement(self) -> "IntervalUnionSet":
        out = []
        start = ZERO
        for a, b in self.intervals:
            if a > start:
                out.append((start, a))
            start = b
        if start < ONE:
            out.append((start, ONE))
        return IntervalUnionSet._trusted(out)

    def union(self, other: "IntervalUnionSet") -> "IntervalUnionSet":
        _check_interval(other)
        return IntervalUnionSet._trusted(_merge(sorted(self.intervals + other.intervals)))

    def intersection(self, other: "IntervalUnionSet") -> "IntervalUnionSet":
        _check_interval(other)
        out = []
        xs, ys = self.intervals, other.intervals
        i = j = 0
        while i < len(xs) and j < len(ys):
            a = max(xs[i][0], ys[j][0])
            b = min(xs[i][1], ys[j][1])
            if a < b:
                out.append((a, b))
            if xs[i][1] < ys[j][1]:
                i += 1
            else:
                j += 1
        # pieces from two canonical inputs never touch, so no merge is needed
        return IntervalUnionSet._trusted(out)

    def difference(self, other: "IntervalUnionSet") -> "IntervalUnionSet":
        return self.intersection(other.complement())

    def symmetric_difference(self, other: "IntervalUnionSet") -> "IntervalUnionSet":
        return self.difference(other).union(other.difference(self))

    __or__ = union
    __and__ = intersection
    __sub__ = difference
    __xor__ = symmetric_difference

    def issubset(self, other: "IntervalUnionSet") -> bool:
        return self.difference(other).is_empty

    __le__ = issubset

    # -- text --------------------------------------------------------------

    def to_json(self) -> list:
        return [[str(a), str(b)] for a, b in self.intervals]

    @classmethod
    def from_json(cls, data, field: str = "set") -> "IntervalUnionSet":
        if not isinstance(data, list):
            raise InputError(f"{field}: expected a list of endpoint pairs")
        pairs = []
        for i, pair in enumerate(data):
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise InputError(f"{field}[{i}]: expected an endpoint pair")
            pairs.append(
                (as_fraction(pair[0], f"{field}[{i}][0]"), as_fraction(pair[1], f"{field}[{i}][1]"))
            )
        return canonicalize(pairs)

    def __str__(self) -> str:
        if not self.intervals:
            return "∅"
        return " ∪ ".join(f"[{a},{b})" for a, b in self.intervals)


def _merge(sorted_pairs) -> list:
    out: list = []
    for a, b in sorted_pairs:
        if out and a <= out[-1][1]:
            if b > out[-1][1]:
                out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return out


def _check_interval(other) -> None:
    if not isinstance(other, IntervalUnionSet):
        raise InputError(f"cannot combine an interval union with {type(other).__name__}")


EMPTY = IntervalUnionSet._trusted(())
FULL = IntervalUnionSet._trusted(((ZERO, ONE),))


def canonicalize(raw_intervals) -> IntervalUnionSet:
    """Canonical form of a list of ``[a, b)`` endpoint pairs.

    >>> str(canonicalize([("1/4", "1/2"), ("0", "1/4")]))
    '[0,1/2)'
    """
    pairs = []
    for i, pair in enumerate(raw_intervals):
        a, b = (as_fraction(v, f"interval[{i}]") for v in pair)
        if not (ZERO <= a < b <= ONE):
            raise InputError(f"interval[{i}]: need 0 <= a < b <= 1, got [{a}, {b})")
        dyadic_level(a)
        dyadic_level(b)
        pairs.append((a, b))
    return IntervalUnionSet._trusted(_merge(sorted(pairs)))


# ---------------------------------------------------------------------------
# finite atom spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomSet:
    """Subset of a finite space ``{0, ..., n-1}`` given by a membership vector."""

    members: tuple[bool, ...]

    @classmethod
    def from_indices(cls, n: int, indices: Iterable[int]) -> "AtomSet":
        flags = [False] * n
        for i in indices:
            if not 0 <= i < n:
                raise InputError(f"atom {i} out of range for {n} atoms")
            flags[i] = True
        return cls(tuple(flags))

    @classmethod
    def from_mask(cls, mask: int, n: int) -> "AtomSet":
        return cls(tuple(bool(mask >> i & 1) for i in range(n)))

    @classmethod
    def empty(cls, n: int) -> "AtomSet":
        return cls((False,) * n)

    @classmethod
    def full(cls, n: int) -> "AtomSet":
        return cls((True,) * n)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(i for i, m in enumerate(self.members) if m)

    @property
    def is_empty(self) -> bool:
        return not any(self.members)

    def to_mask(self) -> int:
        return sum(1 << i for i, m in enumerate(self.members) if m)

    def _zip(self, other):
        if not isinstance(other, AtomSet) or other.size != self.size:
            raise InputError("atom sets live on different spaces")
        return zip(self.members, other.members)

    def complement(self) -> "AtomSet":
        return AtomSet(tuple(not m for m in self.members))

    def union(self, other):
        return AtomSet(tuple(x or y for x, y in self._zip(other)))

    def intersection(self, other):
        return AtomSet(tuple(x and y for x, y in self._zip(other)))

    def difference(self, other):
        return AtomSet(tuple(x and not y for x, y in self._zip(other)))

    def symmetric_difference(self, other):
        return AtomSet(tuple(x != y for x, y in self._zip(other)))

    __or__ = union
    __and__ = intersection
    __sub__ = difference
    __xor__ = symmetric_difference

    def issubset(self, other) -> bool:
        return all(y or not x for x, y in self._zip(other))

    __le__ = issubset

    def contains(self, atom: int) -> bool:
        return self.members[atom]

    __contains__ = contains

    def to_json(self) -> list:
        return list(self.indices)

    @classmethod
    def from_json(cls, data, n: int, field: str = "set") -> "AtomSet":
        if not isinstance(data, list) or not all(isinstance(i, int) for i in data):
            raise InputError(f"{field}: expected a list of atom indices")
        return cls.from_indices(n, data)

    def __str__(self) -> str:
        return "{" + ",".join(map(str, self.indices)) + "}"


# module-level spellings of the set algebra


def set_union(a, b):
    return a.union(b)


def set_intersect(a, b):
    return a.intersection(b)


def set_complement(a):
    return a.complement()


def sym_diff(a, b):
    return a.symmetric_difference(b)


def lebesgue(a: IntervalUnionSet) -> Fraction:
    return a.lebesgue()


# ---------------------------------------------------------------------------
# combinatorial ranking
# ---------------------------------------------------------------------------


def comb_rank(combo: Sequence[int], n: int) -> int:
    """0-based lexicographic rank of a strictly increasing ``combo`` within C(n, len)."""
    k = len(combo)
    rank = 0
    prev = -1
    for i, c in enumerate(combo):
        for v in range(prev + 1, c):
            rank += math.comb(n - 1 - v, k - 1 - i)
        prev = c
    return rank


def comb_unrank(rank: int, n: int, k: int) -> tuple[int, ...]:
    out = []
    v = 0
    for i in range(k):
        while True:
            block = math.comb(n - 1 - v, k - 1 - i)
            if rank < block:
                break
            rank -= block
            v += 1
        out.append(v)
        v += 1
    return tuple(out)


# ---------------------------------------------------------------------------
# generating families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntervalFamily:
    """Every union of level-``level`` dyadic cells with at most ``max_components`` runs.

    Members are ordered by component count, then lexicographically on their
    endpoints; the first member is the empty set.  Indices are 1-based.
    ``max_components=None`` means no cap, i.e. every union of cells.
    """

    level: int
    max_components: int | None = None

    def __post_init__(self):
        if self.level < 0:
            raise InputError("family level must be >= 0")
        if self.max_components is not None and self.max_components < 1:
            raise InputError("family needs max_components >= 1")

    @property
    def cells(self) -> int:
        return 1 << self.level

    @property
    def component_cap(self) -> int:
        most = (self.cells + 1) // 2
        return most if self.max_components is None else min(self.max_components, most)

    def block_size(self, components: int) -> int:
        return math.comb(self.cells + 1, 2 * components)

    @property
    def count(self) -> int:
        return sum(self.block_size(c) for c in range(self.component_cap + 1))

    @property
    def is_exhaustive(self) -> bool:
        return self.component_cap == (self.cells + 1) // 2

    def empty_set(self) -> IntervalUnionSet:
        return EMPTY

    def rank_boundaries(self, bounds: Sequence[int]) -> int:
        c = len(bounds) // 2
        offset = sum(self.block_size(j) for j in range(c))
        return 1 + offset + comb_rank(bounds, self.cells + 1)

    def index_of(self, s: IntervalUnionSet) -> int:
        """1-based position of ``s`` in the family."""
        if s.components > self.component_cap:
            raise InputError(f"{s} has more than {self.component_cap} components")
        return self.rank_boundaries(s.boundaries(self.level))

    def item(self, index: int) -> IntervalUnionSet:
        """The ``index``-th member (1-based)."""
        if index < 1:
            raise IndexError(index)
        rank = index - 1
        for c in range(self.component_cap + 1):
            size = self.block_size(c)
            if rank < size:
                bounds = comb_unrank(rank, self.cells + 1, 2 * c)
                return IntervalUnionSet.from_boundaries(bounds, self.level)
            rank -= size
        raise IndexError(index)

    def __iter__(self) -> Iterator[IntervalUnionSet]:
        for c in range(self.component_cap + 1):
            for bounds in itertools.combinations(range(self.cells + 1), 2 * c):
                yield IntervalUnionSet.from_boundaries(bounds, self.level)

    @property
    def items(self) -> tuple[IntervalUnionSet, ...]:
        if self.count > MATERIALIZE_LIMIT:
            raise InputError(f"family has {self.count} members; too many to materialize")
        return tuple(self)

    def __len__(self) -> int:
        return self.count

    def solver(self, weights: Sequence[int]) -> "RunSolver":
        if len(weights) != self.cells:
            raise InputError("weight vector does not match the family resolution")
        return RunSolver(tuple(weights), self.component_cap)


@dataclass(frozen=True)
class AtomFamily:
    """All subsets of ``n`` atoms (of size at most ``max_size``).

    Ordered by size, then lexicographically on member indices; the first
    member is the empty set.  Indices are 1-based.
    """

    atoms: int
    max_size: int | None = None

    def __post_init__(self):
        if self.atoms < 1:
            raise InputError("atom family needs at least one atom")

    @property
    def size_cap(self) -> int:
        return self.atoms if self.max_size is None else min(self.max_size, self.atoms)

    @property
    def count(self) -> int:
        return sum(math.comb(self.atoms, s) for s in range(self.size_cap + 1))

    @property
    def is_exhaustive(self) -> bool:
        return self.size_cap == self.atoms

    def empty_set(self) -> AtomSet:
        return AtomSet.empty(self.atoms)

    def rank_indices(self, idx: Sequence[int]) -> int:
        offset = sum(math.comb(self.atoms, s) for s in range(len(idx)))
        return 1 + offset + comb_rank(idx, self.atoms)

    def index_of(self, s: AtomSet) -> int:
        if s.size != self.atoms:
            raise InputError("atom set lives on a different space")
        if len(s.indices) > self.size_cap:
            raise InputError(f"{s} is larger than {self.size_cap}")
        return self.rank_indices(s.indices)

    def item(self, index: int) -> AtomSet:
        if index < 1:
            raise IndexError(index)
        rank = index - 1
        for s in range(self.size_cap + 1):
            size = math.comb(self.atoms, s)
            if rank < size:
                return AtomSet.from_indices(self.atoms, comb_unrank(rank, self.atoms, s))
            rank -= size
        raise IndexError(index)

    def __iter__(self) -> Iterator[AtomSet]:
        for s in range(self.size_cap + 1):
            for idx in itertools.combinations(range(self.atoms), s):
                yield AtomSet.from_indices(self.atoms, idx)

    @property
    def items(self) -> tuple[AtomSet, ...]:
        if self.count > MATERIALIZE_LIMIT:
            raise InputError(f"family has {self.count} members; too many to materialize")
        return tuple(self)

    def __len__(self) -> int:
        return self.count

    def solver(self, weights: Sequence[int]) -> "SubsetSolver":
        if len(weights) != self.atoms:
            raise InputError("weight vector does not match the atom count")
        return SubsetSolver(tuple(weights), self.size_cap)


GeneratingFamily = IntervalFamily | AtomFamily


def enumerate_family(level: int, max_components: int | None = None) -> IntervalFamily:
    return IntervalFamily(level, max_components)


# ---------------------------------------------------------------------------
# first-member searches over integer-weighted families
# ---------------------------------------------------------------------------

INF = math.inf


class RunSolver:
    """Searches an :class:`IntervalFamily` for members of small integer weight.

    ``G[j][p]`` is the least weight of a canonical set of exactly ``j`` runs
    starting at cell ``p`` or later; ``H[j][p]`` is the least weight of the
    tail once a run is opened at ``p``, plus ``S[p]``.  Rows are built on
    demand, so searches that stop at few runs stay cheap.
    """

    def __init__(self, weights: tuple[int, ...], cap: int):
        self.weights = weights
        self.n = len(weights)
        self.cap = cap
        self.S = [0] * (self.n + 1)
        for i, w in enumerate(weights):
            self.S[i + 1] = self.S[i] + w
        self.G = [[0] * (self.n + 2)]
        self.H: list = [None]
        self.floor = sum(w for w in weights if w < 0)
        self._min = None
        self._memo: dict = {}

    def _row(self, j: int):
        while len(self.G) <= j:
            k = len(self.G)
            n, S, prev = self.n, self.S, self.G[k - 1]
            g = [INF] * (n + 2)
            h = [INF] * (n + 1)
            best = INF
            for p in range(n - 1, -1, -1):
                t = S[p + 1] + prev[p + 2]
                if t < best:
                    best = t
                h[p] = best
                cand = best - S[p]
                g[p] = cand if cand < g[p + 1] else g[p + 1]
            self.G.append(g)
            self.H.append(h)
        return self.G[j]

    def minimum(self) -> int:
        if self._min is None:
            best = 0
            for c in range(1, self.cap + 1):
                v = self._row(c)[0]
                if v < best:
                    best = v
                if best == self.floor:
                    break
            self._min = best
        return self._min

    def first_at_most(self, t: int) -> tuple[int, ...] | None:
        """Boundaries of the first family member with weight ``<= t``."""
        if t in self._memo:
            return self._memo[t]
        found = None
        if t >= self.floor:
            for c in range(self.cap + 1):
                if self._row(c)[0] <= t:
                    found = self._greedy(c, t)
                    break
        self._memo[t] = found
        return found

    def _greedy(self, c: int, t: int) -> tuple[int, ...]:
        S = self.S
        rem, p = t, 0
        out = []
        for j in range(c, 0, -1):
            g_tail, h = self.G[j - 1], self.H[j]
            a = p
            while h[a] - S[a] > rem:
                a += 1
            b = a + 1
            while S[b] - S[a] + g_tail[b + 1] > rem:
                b += 1
            out += (a, b)
            rem -= S[b] - S[a]
            p = b + 1
        return tuple(out)


class SubsetSolver:
    """The :class:`RunSolver` analogue for an :class:`AtomFamily`."""

    def __init__(self, weights: tuple[int, ...], cap: int):
        self.weights = weights
        self.n = len(weights)
        self.cap = cap
        n = self.n
        # M[j][p]: least weight of exactly j atoms drawn from indices >= p
        self.M = [[0] * (n + 1)]
        for j in range(1, cap + 1):
            prev = self.M[j - 1]
            row = [INF] * (n + 1)
            for p in range(n - 1, -1, -1):
                take = weights[p] + prev[p + 1]
                row[p] = take if take < row[p + 1] else row[p + 1]
            self.M.append(row)
        self._memo: dict = {}

    def minimum(self) -> int:
        return min(row[0] for row in self.M)

    def first_at_most(self, t: int) -> tuple[int, ...] | None:
        if t in self._memo:
            return self._memo[t]
        found = None
        for s in range(self.cap + 1):
            if self.M[s][0] <= t:
                rem, p, out = t, 0, []
                for j in range(s, 0, -1):
                    i = p
                    while self.weights[i] + self.M[j - 1][i + 1] > rem:
                        i += 1
                    out.append(i)
                    rem -= self.weights[i]
                    p = i + 1
                found = tuple(out)
                break
        self._memo[t] = found
        return found
