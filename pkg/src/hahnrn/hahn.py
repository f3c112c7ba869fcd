"""Hahn decomposition of a charge built from near-infimum family members.

Given sets ``E_k`` whose charge is within ``eps_k`` of the infimum, the
negative set is ``X_- = U_m X_m`` with ``X_m = n_{k>=m} E_k``.  The infinite
construction is truncated at ``K`` terms; ``stabilized`` reports whether
dropping the last term would have changed the answer.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .charges import Charge, FamilyChoice, family_search, mask_to_set
from .errors import InputError
from .space import ZERO, AtomSet, IntervalUnionSet, as_fraction


@dataclass(frozen=True)
class EpsSchedule:
    """Geometric tolerances ``eps_k = eps0 * ratio**k`` for ``k = 1..terms``."""

    eps0: Fraction
    ratio: Fraction
    terms: int

    def __post_init__(self):
        object.__setattr__(self, "eps0", as_fraction(self.eps0, "eps0"))
        object.__setattr__(self, "ratio", as_fraction(self.ratio, "eps_ratio"))
        if self.eps0 <= 0:
            raise InputError("eps0 must be positive")
        if not 0 < self.ratio < 1:
            raise InputError("eps_ratio must lie strictly between 0 and 1")
        if self.terms < 1:
            raise InputError("the schedule needs at least one term")

    def eps(self, k: int) -> Fraction:
        if not 1 <= k <= self.terms:
            raise IndexError(k)
        return self.eps0 * self.ratio**k

    @property
    def values(self) -> tuple[Fraction, ...]:
        return tuple(self.eps(k) for k in range(1, self.terms + 1))

    def tail(self, m: int) -> Fraction:
        """``sum_{k=m}^{K} eps_k``."""
        return sum((self.eps(k) for k in range(m, self.terms + 1)), ZERO)


DEFAULT_SCHEDULE = EpsSchedule(Fraction(1), Fraction(1, 2), 24)


@dataclass(frozen=True)
class HahnCertificate:
    pos_defect: Fraction
    neg_defect: Fraction

    @property
    def valid(self) -> bool:
        return self.pos_defect == 0 and self.neg_defect == 0


@dataclass(frozen=True)
class HahnDecomposition:
    x_minus: object
    x_plus: object
    certificate: HahnCertificate
    beta: Fraction
    choices: tuple[FamilyChoice, ...]
    stabilized: bool

    @property
    def near_inf(self) -> tuple:
        return tuple(ch.set for ch in self.choices)

    @property
    def near_inf_indices(self) -> tuple[int, ...]:
        return tuple(ch.index for ch in self.choices)


def near_inf_choices(c: Charge, family, sched: EpsSchedule) -> list[FamilyChoice]:
    search = family_search(c, family)
    beta = search.beta
    out = []
    for k in range(1, sched.terms + 1):
        choice = search.first_below(beta + sched.eps(k))
        # the minimizer itself always qualifies
        assert choice is not None
        out.append(choice)
    return out


def near_inf_sets(c: Charge, family, sched: EpsSchedule) -> list:
    """``E_1..E_K``: for each k the smallest-index member with charge below ``beta + eps_k``."""
    return [ch.set for ch in near_inf_choices(c, family, sched)]


def partial_intersections(e_list: Sequence) -> list:
    """``[X_1, ..., X_K]`` with ``X_m`` the intersection of ``E_m..E_K``."""
    if not e_list:
        raise InputError("need at least one set")
    xs = [None] * len(e_list)
    cur = e_list[-1]
    xs[-1] = cur
    for m in range(len(e_list) - 2, -1, -1):
        cur = e_list[m] & cur
        xs[m] = cur
    return xs


def _truncated(e_list: Sequence, m_max: int):
    xs = partial_intersections(e_list)
    out = xs[0]
    for x in xs[1:m_max]:
        out = out | x
    return out


def build_X_minus(e_list: Sequence, m_max: int | None = None):
    """Truncated ``U_{m<=M} n_{m<=k<=K} E_k`` and its stabilization flag.

    Works on anything closed under ``&`` and ``|``: set objects or integer
    bit masks.  Returns ``(x_minus, stabilized)``; ``stabilized`` is true when
    the value with the last term dropped is the same.
    """
    k = len(e_list)
    m_max = k if m_max is None else m_max
    if not 1 <= m_max <= k:
        raise InputError(f"need 1 <= M_max <= K, got M_max={m_max}, K={k}")
    value = _truncated(e_list, m_max)
    stabilized = k >= 2 and _truncated(e_list[:-1], min(m_max, k - 1)) == value
    return value, stabilized


def exact_negative_set(c: Charge):
    """Atoms or cells where the charge is strictly negative."""
    if c.kind == "atoms":
        return AtomSet(tuple(w < 0 for w in c.weights))
    return IntervalUnionSet.from_cells((v < 0 for v in c.values), c.level)


def verify_hahn(c: Charge, d) -> HahnCertificate:
    """Mass of the positive part inside ``X_-`` and of the negative part inside ``X_+``.

    Both are zero exactly when ``(X_-, X_+)`` is a Hahn decomposition, since a
    piecewise-constant charge is nonnegative on every subset of a set iff its
    negative part vanishes there.
    """
    x_minus = d.x_minus if isinstance(d, HahnDecomposition) else d
    x_plus = x_minus.complement()
    return HahnCertificate(
        c.positive_part().evaluate(x_minus),
        c.negative_part().evaluate(x_plus),
    )


def construct_hahn(c: Charge, family, sched: EpsSchedule = DEFAULT_SCHEDULE) -> HahnDecomposition:
    choices = near_inf_choices(c, family, sched)
    mask, stabilized = build_X_minus([ch.mask for ch in choices])
    x_minus = mask_to_set(family, mask)
    return HahnDecomposition(
        x_minus=x_minus,
        x_plus=x_minus.complement(),
        certificate=verify_hahn(c, x_minus),
        beta=family_search(c, family).beta,
        choices=tuple(choices),
        stabilized=stabilized,
    )
