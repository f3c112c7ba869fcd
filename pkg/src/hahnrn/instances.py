"""Seeded random instances with small-denominator rational values."""

from __future__ import annotations

import random
from fractions import Fraction

from .charges import AtomCharge, DensityCharge
from .errors import InputError
from .parametric import ParametricCharge, ParamGrid

DENOMINATORS = (1, 2, 3, 4)


def random_rational(rng: random.Random, lo: int = -6, hi: int = 6) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.choice(DENOMINATORS))


def random_atom_charge(rng: random.Random, n: int) -> AtomCharge:
    return AtomCharge(tuple(random_rational(rng) for _ in range(n)))


def random_density_charge(rng: random.Random, level: int) -> DensityCharge:
    return DensityCharge(level, tuple(random_rational(rng) for _ in range(1 << level)))


def normalized(values) -> tuple[Fraction, ...]:
    total = Fraction(sum(values)) / len(values)
    if total == 0:
        raise InputError("cannot normalize a zero density")
    return tuple(Fraction(v) / total for v in values)


def random_probability_density(rng: random.Random, level: int, allow_zero: bool = False) -> DensityCharge:
    lo = 0 if allow_zero else 1
    vals = [rng.randint(lo, 8) for _ in range(1 << level)]
    if not any(vals):
        vals[0] = 1
    return DensityCharge(level, normalized(vals))


def random_family(rng: random.Random, base: DensityCharge, points: int = 5) -> ParametricCharge:
    """Probability densities absolutely continuous w.r.t. ``base``, one per grid point."""
    grid = ParamGrid(tuple(Fraction(j, points - 1) for j in range(points)) if points > 1 else (Fraction(0),))
    charges = []
    for _ in grid:
        vals = [b * rng.randint(0, 6) for b in base.values]
        if not any(vals):
            vals = list(base.values)
        charges.append(DensityCharge(base.level, normalized(vals)))
    return ParametricCharge(grid, tuple(charges))


def gen_random_instance(seed: int, kind: str, size: int) -> dict:
    """Input documents (file name -> JSON object) for a seeded instance.

    ``atoms``: a signed atom charge on ``size`` atoms.  ``density``: a signed
    density at level ``size`` plus a probability base at the same level.
    ``parametric``: a probability base and a five-point family at level
    ``size``.
    """
    if size < 0 or (kind == "atoms" and size < 1):
        raise InputError(f"bad instance size {size}")
    rng = random.Random(seed)
    if kind == "atoms":
        return {"charge.json": random_atom_charge(rng, size).to_json()}
    if kind == "density":
        charge = random_density_charge(rng, size)
        base = random_probability_density(rng, size)
        return {"charge.json": charge.to_json(), "base.json": base.to_json()}
    if kind == "parametric":
        base = random_probability_density(rng, size)
        return {"base.json": base.to_json(), "family.json": random_family(rng, base).to_json()}
    raise InputError(f"unknown instance kind {kind!r}; expected atoms, density or parametric")
