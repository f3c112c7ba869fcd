"""Signed measures with exact rational values, and infimum search over a family."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import ClassVar, Sequence, Union

from .errors import InputError
from .space import (
    ZERO,
    AtomFamily,
    AtomSet,
    IntervalFamily,
    IntervalUnionSet,
    as_fraction,
)


@dataclass(frozen=True)
class AtomCharge:
    """Signed measure on ``{0, ..., n-1}`` given by one weight per atom."""

    weights: tuple[Fraction, ...]
    kind: ClassVar[str] = "atoms"

    def __post_init__(self):
        if not self.weights:
            raise InputError("an atom charge needs at least one atom")
        object.__setattr__(self, "weights", tuple(as_fraction(w) for w in self.weights))

    @property
    def atoms(self) -> int:
        return len(self.weights)

    def full_set(self) -> AtomSet:
        return AtomSet.full(self.atoms)

    def evaluate(self, a: AtomSet) -> Fraction:
        if not isinstance(a, AtomSet) or a.size != self.atoms:
            raise InputError("atom charge evaluated on a set from another space")
        return sum((w for w, m in zip(self.weights, a.members) if m), ZERO)

    def total_variation(self) -> Fraction:
        return sum((abs(w) for w in self.weights), ZERO)

    def total(self) -> Fraction:
        return sum(self.weights, ZERO)

    def is_nonnegative(self) -> bool:
        return all(w >= 0 for w in self.weights)

    def map(self, fn) -> "AtomCharge":
        return AtomCharge(tuple(fn(w) for w in self.weights))

    def __neg__(self) -> "AtomCharge":
        return self.map(lambda w: -w)

    def scale(self, r) -> "AtomCharge":
        r = as_fraction(r)
        return self.map(lambda w: r * w)

    def positive_part(self) -> "AtomCharge":
        return self.map(lambda w: max(w, ZERO))

    def negative_part(self) -> "AtomCharge":
        return self.map(lambda w: max(-w, ZERO))

    def to_json(self) -> dict:
        return {"kind": "atoms", "weights": [str(w) for w in self.weights]}


@dataclass(frozen=True)
class DensityCharge:
    """Signed density w.r.t. Lebesgue measure, constant on each level-``level`` dyadic cell."""

    level: int
    values: tuple[Fraction, ...]
    kind: ClassVar[str] = "density"

    def __post_init__(self):
        if self.level < 0:
            raise InputError("density level must be >= 0")
        if len(self.values) != 1 << self.level:
            raise InputError(
                f"density at level {self.level} needs {1 << self.level} values, got {len(self.values)}"
            )
        object.__setattr__(self, "values", tuple(as_fraction(v) for v in self.values))

    @property
    def cells(self) -> int:
        return 1 << self.level

    def full_set(self) -> IntervalUnionSet:
        return IntervalUnionSet.full()

    @cached_property
    def _prefix(self) -> tuple[Fraction, ...]:
        out = [ZERO]
        for v in self.values:
            out.append(out[-1] + v / self.cells)
        return tuple(out)

    def _cdf(self, x: Fraction) -> Fraction:
        n = self.cells
        q, rem = divmod(n, x.denominator)
        if not rem:
            # endpoint on the density's own grid
            return self._prefix[x.numerator * q]
        i = math.floor(x * n)
        if i >= n:
            return self._prefix[n]
        return self._prefix[i] + self.values[i] * (x - Fraction(i, n))

    def evaluate(self, a: IntervalUnionSet) -> Fraction:
        if not isinstance(a, IntervalUnionSet):
            raise InputError("density charge evaluated on a set from another space")
        return sum((self._cdf(hi) - self._cdf(lo) for lo, hi in a.intervals), ZERO)

    def refine(self, level: int) -> "DensityCharge":
        if level < self.level:
            raise InputError(f"cannot refine level {self.level} density down to level {level}")
        if level == self.level:
            return self
        rep = 1 << (level - self.level)
        return DensityCharge(level, tuple(v for v in self.values for _ in range(rep)))

    def masses(self, level: int | None = None) -> tuple[Fraction, ...]:
        """Mass of every cell at ``level`` (default: the density's own level)."""
        d = self if level is None else self.refine(level)
        return tuple(v / d.cells for v in d.values)

    def total_variation(self) -> Fraction:
        return sum((abs(v) for v in self.values), ZERO) / self.cells

    def total(self) -> Fraction:
        return sum(self.values, ZERO) / self.cells

    def is_nonnegative(self) -> bool:
        return all(v >= 0 for v in self.values)

    def map(self, fn) -> "DensityCharge":
        return DensityCharge(self.level, tuple(fn(v) for v in self.values))

    def __neg__(self) -> "DensityCharge":
        return self.map(lambda v: -v)

    def scale(self, r) -> "DensityCharge":
        r = as_fraction(r)
        return self.map(lambda v: r * v)

    def positive_part(self) -> "DensityCharge":
        return self.map(lambda v: max(v, ZERO))

    def negative_part(self) -> "DensityCharge":
        return self.map(lambda v: max(-v, ZERO))

    def to_json(self) -> dict:
        return {"kind": "density", "level": self.level, "values": [str(v) for v in self.values]}


Charge = Union[AtomCharge, DensityCharge]


def charge_from_json(data, field: str = "charge") -> Charge:
    if not isinstance(data, dict):
        raise InputError(f"{field}: expected an object")
    kind = data.get("kind")
    if kind == "atoms":
        raw = data.get("weights")
        if not isinstance(raw, list) or not raw:
            raise InputError(f"{field}.weights: expected a nonempty list")
        return AtomCharge(tuple(as_fraction(w, f"{field}.weights[{i}]") for i, w in enumerate(raw)))
    if kind == "density":
        level = data.get("level")
        raw = data.get("values")
        if not isinstance(level, int) or isinstance(level, bool) or level < 0:
            raise InputError(f"{field}.level: expected a nonnegative integer")
        if not isinstance(raw, list):
            raise InputError(f"{field}.values: expected a list")
        return DensityCharge(
            level, tuple(as_fraction(v, f"{field}.values[{i}]") for i, v in enumerate(raw))
        )
    raise InputError(f"{field}.kind: expected 'atoms' or 'density', got {kind!r}")


def charge_eval(c: Charge, a) -> Fraction:
    return c.evaluate(a)


def total_variation(c: Charge) -> Fraction:
    return c.total_variation()


def zero_like(c: Charge) -> Charge:
    return c.map(lambda _: ZERO)


def combine(p_mu: Charge, r, p_base: Charge) -> Charge:
    """The charge ``p_mu - r * p_base``, cell by cell at the finer of the two grids."""
    r = as_fraction(r, "r")
    if isinstance(p_mu, AtomCharge) and isinstance(p_base, AtomCharge):
        if p_mu.atoms != p_base.atoms:
            raise InputError("atom charges on spaces of different size")
        return AtomCharge(tuple(a - r * b for a, b in zip(p_mu.weights, p_base.weights)))
    if isinstance(p_mu, DensityCharge) and isinstance(p_base, DensityCharge):
        level = max(p_mu.level, p_base.level)
        x, y = p_mu.refine(level), p_base.refine(level)
        return DensityCharge(level, tuple(a - r * b for a, b in zip(x.values, y.values)))
    raise InputError("cannot combine an atom charge with a density charge")



# ---------------------------------------------------------------------------
# family search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyChoice:
    """A family member picked by a search; ``key`` is its boundary/index tuple."""

    family: IntervalFamily | AtomFamily
    key: tuple[int, ...]

    @cached_property
    def index(self) -> int:
        if isinstance(self.family, IntervalFamily):
            return self.family.rank_boundaries(self.key)
        return self.family.rank_indices(self.key)

    @cached_property
    def mask(self) -> int:
        if isinstance(self.family, IntervalFamily):
            m = 0
            for i in range(0, len(self.key), 2):
                m |= (1 << self.key[i + 1]) - (1 << self.key[i])
            return m
        return sum(1 << i for i in self.key)

    @cached_property
    def set(self):
        if isinstance(self.family, IntervalFamily):
            return IntervalUnionSet.from_boundaries(self.key, self.family.level)
        return AtomSet.from_indices(self.family.atoms, self.key)


class FamilySearch:
    """Exact searches of one charge over one generating family.

    Weights are scaled to integers by a common denominator so every
    comparison against a rational threshold is an integer comparison.
    """

    def __init__(self, c: Charge, family):
        if isinstance(c, AtomCharge):
            if not isinstance(family, AtomFamily) or family.atoms != c.atoms:
                raise InputError("atom charge needs an atom family over the same atoms")
            masses = c.weights
        elif isinstance(c, DensityCharge):
            if not isinstance(family, IntervalFamily):
                raise InputError("density charge needs an interval family")
            if family.level < c.level:
                raise InputError(
                    f"family level {family.level} is coarser than the charge grid (level {c.level})"
                )
            masses = c.masses(family.level)
        else:
            raise InputError(f"not a charge: {c!r}")
        self.charge = c
        self.family = family
        self.scale = math.lcm(*(m.denominator for m in masses))
        self.solver = family.solver([int(m * self.scale) for m in masses])
        self._choices: dict = {}

    def _choice(self, key):
        if key is None:
            return None
        if key not in self._choices:
            self._choices[key] = FamilyChoice(self.family, key)
        return self._choices[key]

    @cached_property
    def beta(self) -> Fraction:
        return Fraction(self.solver.minimum(), self.scale)

    def first_below(self, threshold) -> FamilyChoice | None:
        """Smallest-index member whose charge is strictly below ``threshold``."""
        t = math.ceil(as_fraction(threshold) * self.scale) - 1
        return self._choice(self.solver.first_at_most(t))

    def first_at_most(self, threshold) -> FamilyChoice | None:
        t = math.floor(as_fraction(threshold) * self.scale)
        return self._choice(self.solver.first_at_most(t))

    def mask_value(self, mask: int) -> Fraction:
        w = self.solver.weights
        total = 0
        i = 0
        while mask:
            if mask & 1:
                total += w[i]
            mask >>= 1
            i += 1
        return Fraction(total, self.scale)


@lru_cache(maxsize=8192)
def family_search(c: Charge, family) -> FamilySearch:
    return FamilySearch(c, family)


@dataclass(frozen=True)
class InfimumResult:
    beta: Fraction
    argmin_index: int
    argmin_set: object


def infimum_over_family(c: Charge, family) -> InfimumResult:
    """Least charge over the family, with the smallest index attaining it."""
    search = family_search(c, family)
    choice = search.first_at_most(search.beta)
    return InfimumResult(search.beta, choice.index, choice.set)


def first_below(c: Charge, family, threshold) -> FamilyChoice | None:
    return family_search(c, family).first_below(threshold)


def family_for(c: Charge, level: int | None = None, max_components: int | None = None):
    """Exhaustive family matching the charge's space (at ``level`` for densities)."""
    if isinstance(c, AtomCharge):
        return AtomFamily(c.atoms)
    return IntervalFamily(c.level if level is None else level, max_components)


def mask_to_set(c_or_family, mask: int):
    fam = c_or_family
    if isinstance(fam, IntervalFamily):
        return IntervalUnionSet.from_mask(mask, fam.level)
    if isinstance(fam, AtomFamily):
        return AtomSet.from_mask(mask, fam.atoms)
    raise InputError("expected a family")


def restrict_sum(values: Sequence[Fraction], mask: int) -> Fraction:
    total = ZERO
    i = 0
    while mask:
        if mask & 1:
            total += values[i]
        mask >>= 1
        i += 1
    return total
