"""Hahn decompositions chosen measurably in a parameter.

For every parameter ``mu`` on a finite grid and every tolerance index ``k``
the selection rule picks ``N(mu, k)``, the smallest family index with
``lambda(mu, I_N) < beta(mu) + eps_k``.  The product set
``E_k = U_N A_{N,k} x I_N`` then has sections ``E_k(mu) = I_{N(mu,k)}``, and
the negative set is assembled section by section.

Measurability in ``mu`` is represented by a finite partition of the grid on
which the section map is constant; the partition is generated by the sets
``Y_{n,k} = {mu : lambda(mu, I_n) - beta(mu) < eps_k}``.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .charges import AtomCharge, Charge, DensityCharge, charge_from_json, family_search, mask_to_set
from .errors import InputError
from .hahn import EpsSchedule, build_X_minus, near_inf_choices, verify_hahn
from .space import as_fraction

WORKERS_ENV = "HAHNRN_WORKERS"


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise InputError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def ordered_map(fn: Callable, items: Sequence, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, optionally across processes; order is preserved."""
    workers = default_workers() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


@dataclass(frozen=True)
class ParamGrid:
    points: tuple[Fraction, ...]

    def __post_init__(self):
        pts = tuple(as_fraction(p, "params") for p in self.points)
        if not pts:
            raise InputError("parameter grid is empty")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise InputError("parameter grid must be strictly increasing")
        if pts[0] < 0 or pts[-1] > 1:
            raise InputError("parameters must lie in [0, 1]")
        object.__setattr__(self, "points", pts)

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __contains__(self, mu) -> bool:
        return as_fraction(mu) in self.points


@dataclass(frozen=True)
class ParametricCharge:
    """Total table ``mu -> lambda(mu, .)`` over a :class:`ParamGrid`."""

    grid: ParamGrid
    charges: tuple

    def __post_init__(self):
        if len(self.charges) != len(self.grid):
            raise InputError("need exactly one charge per grid point")
        kinds = {type(c) for c in self.charges}
        if len(kinds) != 1:
            raise InputError("all charges in a family must be of one kind")
        first = self.charges[0]
        if isinstance(first, DensityCharge):
            if len({c.level for c in self.charges}) != 1:
                raise InputError("all densities in a family must share one grid level")
        elif isinstance(first, AtomCharge):
            if len({c.atoms for c in self.charges}) != 1:
                raise InputError("all atom charges in a family must share one space")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple]) -> "ParametricCharge":
        pairs = list(pairs)
        return cls(ParamGrid(tuple(p for p, _ in pairs)), tuple(c for _, c in pairs))

    @classmethod
    def constant(cls, grid: ParamGrid, c: Charge) -> "ParametricCharge":
        return cls(grid, (c,) * len(grid))

    def __getitem__(self, mu) -> Charge:
        mu = as_fraction(mu)
        try:
            return self.charges[self.grid.points.index(mu)]
        except ValueError:
            raise InputError(f"parameter {mu} is not on the grid") from None

    def items(self):
        return zip(self.grid.points, self.charges)

    def map(self, fn: Callable[[Fraction, Charge], Charge]) -> "ParametricCharge":
        return ParametricCharge(self.grid, tuple(fn(mu, c) for mu, c in self.items()))

    def to_json(self) -> dict:
        return {
            "params": [str(p) for p in self.grid.points],
            "charges": [c.to_json() for c in self.charges],
        }

    @classmethod
    def from_json(cls, data, field: str = "family") -> "ParametricCharge":
        if not isinstance(data, dict):
            raise InputError(f"{field}: expected an object")
        params, charges = data.get("params"), data.get("charges")
        if not isinstance(params, list) or not isinstance(charges, list):
            raise InputError(f"{field}: expected 'params' and 'charges' lists")
        if len(params) != len(charges):
            raise InputError(f"{field}: 'params' and 'charges' differ in length")
        grid = ParamGrid(tuple(as_fraction(p, f"{field}.params[{i}]") for i, p in enumerate(params)))
        return cls(grid, tuple(charge_from_json(c, f"{field}.charges[{i}]") for i, c in enumerate(charges)))


def beta_curve(pc: ParametricCharge, family) -> dict:
    """``mu -> beta(mu)``, the family infimum of each charge."""
    return {mu: family_search(c, family).beta for mu, c in pc.items()}


@dataclass(frozen=True)
class _Section:
    keys: tuple          # family keys of E_1(mu)..E_K(mu)
    indices: tuple       # N(mu, 1..K)
    mask: int            # X_-(mu) as a cell/atom mask
    stabilized: bool
    beta: Fraction


def _section_task(args) -> _Section:
    c, family, sched = args
    choices = near_inf_choices(c, family, sched)
    mask, stabilized = build_X_minus([ch.mask for ch in choices])
    return _Section(
        tuple(ch.key for ch in choices),
        tuple(ch.index for ch in choices),
        mask,
        stabilized,
        family_search(c, family).beta,
    )


@dataclass(frozen=True)
class SelectionTable:
    """Selected indices ``N(mu, k)`` together with ``beta(mu)``."""

    pc: ParametricCharge
    family: object
    schedule: EpsSchedule
    beta: dict
    index: dict  # (mu, k) -> N, k 1-based

    def chosen(self, mu, k: int) -> int:
        return self.index[as_fraction(mu), k]

    def chosen_set(self, mu, k: int):
        return self.family.item(self.chosen(mu, k))

    def in_Y(self, mu, n: int, k: int) -> bool:
        """``mu in Y_{n,k}``, evaluated directly from the charge."""
        mu = as_fraction(mu)
        value = self.pc[mu].evaluate(self.family.item(n))
        return value - self.beta[mu] < self.schedule.eps(k)

    def A(self, n: int, k: int) -> tuple:
        """Grid points of ``A_{n,k}``: those whose selected index is ``n``."""
        return tuple(mu for mu in self.pc.grid if self.index[mu, k] == n)

    def signature(self, mu) -> tuple[int, ...]:
        mu = as_fraction(mu)
        return tuple(self.index[mu, k] for k in range(1, self.schedule.terms + 1))


def _sections(pc, family, sched, workers):
    return ordered_map(_section_task, [(c, family, sched) for c in pc.charges], workers)


def _table(pc, family, sched, sections) -> SelectionTable:
    index = {}
    for mu, sec in zip(pc.grid, sections):
        for k, n in enumerate(sec.indices, start=1):
            index[mu, k] = n
    return SelectionTable(pc, family, sched, {mu: s.beta for mu, s in zip(pc.grid, sections)}, index)


def selection_table(pc: ParametricCharge, family, sched: EpsSchedule, workers: int | None = None) -> SelectionTable:
    return _table(pc, family, sched, _sections(pc, family, sched, workers))


def partition_by(grid: Iterable, key: Callable) -> tuple[tuple[Fraction, ...], ...]:
    """Group grid points by ``key``; cells are ordered by their first point."""
    cells: dict = {}
    for mu in grid:
        cells.setdefault(key(mu), []).append(mu)
    return tuple(tuple(c) for c in cells.values())


@dataclass(frozen=True)
class JointSet:
    """Sections ``mu -> X(mu)`` plus a grid partition on which they are constant."""

    sections: dict
    partition: tuple
    table: SelectionTable
    stabilized: dict

    def section(self, mu):
        return self.sections[as_fraction(mu)]

    def cell_of(self, mu) -> tuple:
        mu = as_fraction(mu)
        return next(cell for cell in self.partition if mu in cell)


def build_joint_X_minus(
    pc: ParametricCharge, family, sched: EpsSchedule, workers: int | None = None
) -> JointSet:
    sections = _sections(pc, family, sched, workers)
    table = _table(pc, family, sched, sections)
    return JointSet(
        sections={mu: mask_to_set(family, s.mask) for mu, s in zip(pc.grid, sections)},
        partition=partition_by(pc.grid, table.signature),
        table=table,
        stabilized={mu: s.stabilized for mu, s in zip(pc.grid, sections)},
    )


def y_membership_partition(table: SelectionTable) -> tuple:
    """Recompute the partition from ``Y_{n,k}`` memberships alone.

    Membership of ``mu`` in ``A_{N,k} = Y_{N,k} - U_{n<N} Y_{n,k}`` is read off
    by testing ``Y_{1,k}, Y_{2,k}, ...`` in turn; the selection table is not
    consulted.  Scans every ``n`` up to the first hit, so only use it on
    small families.
    """
    grid = table.pc.grid
    terms = table.schedule.terms

    def first_hit(mu, k):
        n = 1
        while not table.in_Y(mu, n, k):
            n += 1
        return n

    return partition_by(grid, lambda mu: tuple(first_hit(mu, k) for k in range(1, terms + 1)))


def verify_sections(pc: ParametricCharge, joint: JointSet) -> dict:
    """Hahn certificate of every section."""
    return {mu: verify_hahn(c, joint.sections[mu]) for mu, c in pc.items()}
