"""Radon-Nikodym derivative of a parametric family, built from level sets.

For each ``r`` on a rational grid the charge ``P(mu, .) - r P`` gets a
parameter-measurable Hahn decomposition with negative sections
``X^r(mu)``.  These are assembled into

    S_0 = complement of U_r X^r,        S_r = (U_{r' <= r} X^{r'}) u S_0,

and the derivative is ``f(mu, nu) = min{r : nu in S_r(mu)}``.

``X^r(mu)`` is taken as the complement of the negative section built for
``r P - P(mu, .)``: cells where the two measures balance exactly then sit
inside ``S_r``, which is the side the level-set condition
``P(mu, .) <= r P on S_r``, ``P(mu, .) > r P off S_r`` asks for.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .charges import AtomCharge, Charge, combine
from .errors import AbsoluteContinuityError, ConstructionError, InputError
from .hahn import DEFAULT_SCHEDULE, EpsSchedule, HahnCertificate, verify_hahn
from .parametric import (
    JointSet,
    ParametricCharge,
    _section_task,
    _table,
    ordered_map,
    partition_by,
)
from .charges import mask_to_set
from .space import ZERO, AtomFamily, AtomSet, IntervalFamily, IntervalUnionSet, as_fraction


@dataclass(frozen=True)
class RationalGrid:
    """Increasing nonnegative rationals ``0 = r_0 < r_1 < ... < r_max``."""

    values: tuple[Fraction, ...]

    def __post_init__(self):
        vals = tuple(as_fraction(v, "r-grid") for v in self.values)
        if not vals or vals[0] != 0:
            raise InputError("the r-grid must start at 0")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise InputError("the r-grid must be strictly increasing")
        object.__setattr__(self, "values", vals)

    @classmethod
    def uniform(cls, step, r_max) -> "RationalGrid":
        step, r_max = as_fraction(step, "r_step"), as_fraction(r_max, "r_max")
        if step <= 0 or r_max < 0:
            raise InputError("need r_step > 0 and r_max >= 0")
        top = math.ceil(r_max / step)
        return cls(tuple(j * step for j in range(top + 1)))

    @property
    def r_max(self) -> Fraction:
        return self.values[-1]

    @property
    def step(self) -> Fraction:
        """Largest gap between neighbours (0 for the one-point grid)."""
        return max((b - a for a, b in zip(self.values, self.values[1:])), default=ZERO)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


# ---------------------------------------------------------------------------
# cellwise views
# ---------------------------------------------------------------------------


def _units(c: Charge, family) -> tuple[Fraction, ...]:
    """Masses of the family's atomic units (cells or atoms) under ``c``."""
    if isinstance(c, AtomCharge):
        return c.weights
    return c.masses(family.level)


def _unit_set(family, i: int):
    if isinstance(family, IntervalFamily):
        return IntervalUnionSet.cell(i, family.level)
    return AtomSet.from_indices(family.atoms, [i])


def _unit_count(family) -> int:
    return family.cells if isinstance(family, IntervalFamily) else family.atoms


def _mask(s, family) -> int:
    return s.to_mask(family.level) if isinstance(family, IntervalFamily) else s.to_mask()


def _default_family(charges) -> IntervalFamily | AtomFamily:
    first = charges[0]
    if isinstance(first, AtomCharge):
        return AtomFamily(first.atoms)
    return IntervalFamily(max(c.level for c in charges))


def _check_pair(base_pc: ParametricCharge, fam_pc: ParametricCharge, family) -> None:
    if base_pc.grid != fam_pc.grid:
        raise InputError("base and family are indexed by different parameter grids")
    for mu, base in base_pc.items():
        fam = fam_pc[mu]
        if type(base) is not type(fam):
            raise InputError("base and family charges are of different kinds")
        if not base.is_nonnegative() or not fam.is_nonnegative():
            raise InputError(f"measures must be nonnegative (parameter {mu})")
        for i, (b, p) in enumerate(zip(_units(base, family), _units(fam, family))):
            if b == 0 and p != 0:
                raise AbsoluteContinuityError(i, mu)


def max_ratio(base_pc: ParametricCharge, fam_pc: ParametricCharge, family) -> Fraction:
    best = ZERO
    for mu, base in base_pc.items():
        for b, p in zip(_units(base, family), _units(fam_pc[mu], family)):
            if b > 0:
                best = max(best, p / b)
    return best


def auto_r_max(base_pc, fam_pc, family) -> Fraction:
    """Smallest integer strictly above every cell ratio."""
    return Fraction(math.floor(max_ratio(base_pc, fam_pc, family)) + 1)


def auto_grid(p_base, p_fam: ParametricCharge, step, family=None) -> RationalGrid:
    base_pc = _as_parametric(p_base, p_fam)
    family = family or _default_family(base_pc.charges + p_fam.charges)
    return RationalGrid.uniform(step, auto_r_max(base_pc, p_fam, family))


def _as_parametric(p_base, like: ParametricCharge) -> ParametricCharge:
    if isinstance(p_base, ParametricCharge):
        return p_base
    return ParametricCharge.constant(like.grid, p_base)


# ---------------------------------------------------------------------------
# level-set family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LevelSetFamily:
    params: tuple[Fraction, ...]
    rgrid: RationalGrid
    family: object
    raw: dict          # r -> JointSet of the positive sides (negative sets of r P - P(mu, .))
    x_minus: dict      # r -> {mu: X^r(mu)}
    s0: dict           # mu -> S_0(mu)
    sections: dict     # r -> {mu: S_r(mu)}
    table: dict = field(compare=False, repr=False)  # mu -> per-unit derivative values

    def section(self, r, mu):
        return self.sections[as_fraction(r)][as_fraction(mu)]

    def negative(self, r, mu):
        return self.x_minus[as_fraction(r)][as_fraction(mu)]

    def partition(self, r) -> tuple:
        return self.raw[as_fraction(r)].partition


def _level_family(base_pc, fam_pc, rg, family, sched, workers) -> LevelSetFamily:
    family = family or _default_family(base_pc.charges + fam_pc.charges)
    _check_pair(base_pc, fam_pc, family)
    need = max_ratio(base_pc, fam_pc, family)
    if rg.r_max < need:
        raise InputError(f"r_max={rg.r_max} is below the largest cell ratio {need}")

    params = fam_pc.grid.points
    flipped = {
        r: ParametricCharge(
            fam_pc.grid,
            tuple(combine(base.scale(r), 1, fam) for base, fam in zip(base_pc.charges, fam_pc.charges)),
        )
        for r in rg
    }
    tasks = [(c, family, sched) for r in rg for c in flipped[r].charges]
    done = ordered_map(_section_task, tasks, workers)

    raw, x_minus = {}, {}
    for j, r in enumerate(rg):
        secs = done[j * len(params) : (j + 1) * len(params)]
        table = _table(flipped[r], family, sched, secs)
        plus = {mu: mask_to_set(family, s.mask) for mu, s in zip(params, secs)}
        raw[r] = JointSet(
            sections=plus,
            partition=partition_by(params, table.signature),
            table=table,
            stabilized={mu: s.stabilized for mu, s in zip(params, secs)},
        )
        x_minus[r] = {mu: plus[mu].complement() for mu in params}

    full_mask = (1 << _unit_count(family)) - 1
    s0, sections, table = {}, {r: {} for r in rg}, {}
    for mu in params:
        covered = 0
        for r in rg:
            covered |= _mask(x_minus[r][mu], family)
        s0_mask = full_mask & ~covered
        s0[mu] = mask_to_set(family, s0_mask)
        cum = s0_mask
        values: list = [None] * _unit_count(family)
        for r in rg:
            cum |= _mask(x_minus[r][mu], family)
            sections[r][mu] = mask_to_set(family, cum)
            for i in range(len(values)):
                if values[i] is None and cum >> i & 1:
                    values[i] = r
        table[mu] = tuple(values)
    return LevelSetFamily(params, rg, family, raw, x_minus, s0, sections, table)


def build_level_family(
    p_base: Charge,
    p_fam: ParametricCharge,
    rg: RationalGrid,
    family=None,
    sched: EpsSchedule = DEFAULT_SCHEDULE,
    workers: int | None = None,
) -> LevelSetFamily:
    """Level sets ``S_r`` of the derivative of ``P(mu, .)`` with respect to ``P``.

    Both the base and every family member must be probability measures, and
    each ``P(mu, .)`` must vanish wherever ``P`` does at grid resolution.
    """
    for name, c in [("base", p_base)] + [(f"family[{mu}]", c) for mu, c in p_fam.items()]:
        if not c.is_nonnegative():
            raise InputError(f"{name} is not a nonnegative measure")
        if c.total() != 1:
            raise InputError(f"{name} has total mass {c.total()}, expected 1")
    return _level_family(_as_parametric(p_base, p_fam), p_fam, rg, family, sched, workers)


@dataclass(frozen=True)
class DerivativeField:
    levels: LevelSetFamily

    @property
    def rgrid(self) -> RationalGrid:
        return self.levels.rgrid

    @property
    def params(self) -> tuple[Fraction, ...]:
        return self.levels.params

    def cell_values(self, mu) -> tuple[Fraction, ...]:
        """Derivative value on each cell (or atom) of the family's resolution."""
        mu = as_fraction(mu)
        if mu not in self.levels.table:
            raise InputError(f"parameter {mu} is not on the grid")
        return self.levels.table[mu]

    def __call__(self, mu, nu) -> Fraction:
        return evaluate_derivative(self, mu, nu)

    def to_json(self) -> dict:
        return {
            "r_grid": {"step": str(self.rgrid.step), "r_max": str(self.rgrid.r_max)},
            "values": {str(mu): [str(v) for v in self.cell_values(mu)] for mu in self.params},
        }


def evaluate_derivative(df: DerivativeField, mu, nu) -> Fraction:
    """Least grid ``r`` with ``nu`` in ``S_r(mu)``."""
    mu = as_fraction(mu, "mu")
    if mu not in df.levels.s0:
        raise InputError(f"parameter {mu} is not on the grid")
    if isinstance(df.levels.family, IntervalFamily):
        nu = as_fraction(nu, "nu")
        if not 0 <= nu < 1:
            raise InputError(f"nu={nu} is outside [0, 1)")
    for r in df.rgrid:
        if nu in df.levels.sections[r][mu]:
            return r
    raise ConstructionError(f"({mu}, {nu}) is not covered by S_r_max")


def derivative_field(lf: LevelSetFamily) -> DerivativeField:
    return DerivativeField(lf)


@dataclass(frozen=True)
class Staircase:
    """``f_delta = delta * floor(f / delta)``: the largest multiple of ``delta`` not above ``f``."""

    field: DerivativeField
    delta: Fraction

    def __call__(self, mu, nu) -> Fraction:
        return self._snap(evaluate_derivative(self.field, mu, nu))

    def cell_values(self, mu) -> tuple[Fraction, ...]:
        return tuple(self._snap(v) for v in self.field.cell_values(mu))

    def _snap(self, v: Fraction) -> Fraction:
        return self.delta * math.floor(v / self.delta)


def staircase(df: DerivativeField, delta) -> Staircase:
    delta = as_fraction(delta, "delta")
    if delta <= 0:
        raise InputError("delta must be positive")
    return Staircase(df, delta)


def integrate(df: DerivativeField, base: Charge, mu, a) -> Fraction:
    """``int_A f(mu, .) dbase`` as a finite sum over cells."""
    family = df.levels.family
    total = ZERO
    for i, v in enumerate(df.cell_values(mu)):
        if v:
            total += v * base.evaluate(a & _unit_set(family, i))
    return total


def verify_rn_identity(df: DerivativeField, p_base, p_fam: ParametricCharge, mu, a) -> Fraction:
    """``|int_A f dP - P(mu, A)|``, exactly."""
    mu = as_fraction(mu, "mu")
    base = p_base[mu] if isinstance(p_base, ParametricCharge) else p_base
    return abs(integrate(df, base, mu, a) - p_fam[mu].evaluate(a))


@dataclass(frozen=True)
class NullDefects:
    """Base mass of ``S_0(mu)`` and of ``X^{r'}(mu) - X^r(mu)`` for ``r' < r``.

    ``drift[mu, r']`` is the base mass of ``X^{r'}(mu)`` minus every later
    ``X^r(mu)``; all pairwise defects vanish iff it does, since masses are
    nonnegative and that set is the union of the pairwise differences.
    """

    s0: dict
    drift: dict

    @property
    def ok(self) -> bool:
        return all(v == 0 for v in self.s0.values()) and all(v == 0 for v in self.drift.values())

    def to_json(self) -> dict:
        return {
            "s0": {str(mu): str(v) for mu, v in self.s0.items()},
            "drift_max": str(max(self.drift.values(), default=ZERO)),
            "ok": self.ok,
        }


def null_defects(lf: LevelSetFamily, p_base) -> NullDefects:
    s0, drift = {}, {}
    rs = lf.rgrid.values
    for mu in lf.params:
        base = p_base[mu] if isinstance(p_base, ParametricCharge) else p_base
        s0[mu] = base.evaluate(lf.s0[mu])
        later = None
        for r in reversed(rs):
            here = lf.x_minus[r][mu]
            drift[mu, r] = ZERO if later is None else base.evaluate(here - later)
            later = here if later is None else later & here
    return NullDefects(s0, drift)


def pair_defect(lf: LevelSetFamily, p_base: Charge, mu, r_lo, r_hi) -> Fraction:
    """Base mass of ``X^{r_lo}(mu) - X^{r_hi}(mu)``."""
    return p_base.evaluate(lf.negative(r_lo, mu) - lf.negative(r_hi, mu))


def level_certificates(lf: LevelSetFamily, p_base, p_fam: ParametricCharge) -> dict:
    """Hahn certificate of ``(S_r(mu), complement)`` for ``P(mu, .) - r P``, per ``(r, mu)``."""
    out = {}
    for r in lf.rgrid:
        for mu in lf.params:
            base = p_base[mu] if isinstance(p_base, ParametricCharge) else p_base
            out[r, mu] = verify_hahn(combine(p_fam[mu], r, base), lf.sections[r][mu])
    return out


def two_family_rn(
    lam_fam: ParametricCharge,
    mu_fam: ParametricCharge,
    rg: RationalGrid,
    family=None,
    sched: EpsSchedule = DEFAULT_SCHEDULE,
    workers: int | None = None,
) -> DerivativeField:
    """Derivative of ``mu_x`` with respect to ``lambda_x`` for every grid ``x``.

    Neither family needs unit mass; both must be nonnegative with
    ``mu_x`` absolutely continuous with respect to ``lambda_x``.
    """
    return DerivativeField(_level_family(lam_fam, mu_fam, rg, family, sched, workers))


def rn_field(p_base, p_fam, rg, family=None, sched=DEFAULT_SCHEDULE, workers=None) -> DerivativeField:
    return DerivativeField(build_level_family(p_base, p_fam, rg, family, sched, workers))


def certificates_ok(certs: dict) -> bool:
    return all(isinstance(c, HahnCertificate) and c.valid for c in certs.values())
