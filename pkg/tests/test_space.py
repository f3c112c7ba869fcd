import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import interval_sets, atom_sets
from hahnrn.errors import InputError
from hahnrn.space import (
    EMPTY,
    FULL,
    AtomFamily,
    AtomSet,
    IntervalFamily,
    IntervalUnionSet,
    canonicalize,
    comb_rank,
    comb_unrank,
    enumerate_family,
    lebesgue,
    set_complement,
    set_intersect,
    set_union,
    sym_diff,
)


def S(*pairs):
    return canonicalize(pairs)


class TestCanonicalize:
    def test_adjacent_merge(self):
        assert S(("0", "1/2"), ("1/2", "3/4")) == S(("0", "3/4"))
        assert S(("0", "1/2"), ("1/2", "3/4")).intervals == ((0, Fraction(3, 4)),)

    def test_empty(self):
        assert canonicalize([]) == EMPTY
        assert canonicalize([]).is_empty

    def test_sort_then_merge(self):
        assert S(("1/4", "1/2"), ("0", "1/4")).intervals == ((0, Fraction(1, 2)),)

    def test_overlap(self):
        assert S(("0", "1/2"), ("1/4", "3/8")) == S(("0", "1/2"))

    @pytest.mark.parametrize(
        "pairs",
        [[("1/2", "1/4")], [("0", "0")], [("-1/2", "1/2")], [("1/2", "3/2")], [("0", "1/3")]],
    )
    def test_rejects_bad_endpoints(self, pairs):
        with pytest.raises(InputError):
            canonicalize(pairs)

    def test_constructor_rejects_noncanonical(self):
        with pytest.raises(InputError):
            IntervalUnionSet(((Fraction(0), Fraction(1, 2)), (Fraction(1, 2), Fraction(1))))

    @given(st.lists(st.tuples(st.integers(0, 16), st.integers(0, 16)), max_size=6))
    def test_idempotent(self, raw):
        pairs = [(Fraction(min(a, b), 16), Fraction(max(a, b), 16)) for a, b in raw if a != b]
        once = canonicalize(pairs)
        assert canonicalize(once.intervals) == once

    @given(st.lists(st.tuples(st.integers(0, 16), st.integers(0, 16)), max_size=6))
    def test_same_point_set(self, raw):
        pairs = [(Fraction(min(a, b), 16), Fraction(max(a, b), 16)) for a, b in raw if a != b]
        s = canonicalize(pairs)
        for i in range(16):
            x = Fraction(2 * i + 1, 32)
            assert (x in s) == any(a <= x < b for a, b in pairs)


class TestAlgebra:
    def test_self_sym_diff(self):
        a = S(("0", "1/2"), ("3/4", "7/8"))
        assert sym_diff(a, a) == EMPTY

    def test_sym_diff_example(self):
        assert sym_diff(S(("0", "1/2")), S(("1/4", "3/4"))) == S(("0", "1/4"), ("1/2", "3/4"))

    def test_complement_of_empty(self):
        assert set_complement(EMPTY) == FULL == S(("0", "1"))

    def test_union_intersect_examples(self):
        a, b = S(("0", "1/2")), S(("1/4", "3/4"))
        assert set_union(a, b) == S(("0", "3/4"))
        assert set_intersect(a, b) == S(("1/4", "1/2"))
        assert a - b == S(("0", "1/4"))

    def test_mixing_spaces_is_an_error(self):
        with pytest.raises(InputError):
            S(("0", "1/2")) | AtomSet.empty(2)
        with pytest.raises(InputError):
            AtomSet.empty(2) | AtomSet.empty(3)

    @given(interval_sets(), interval_sets())
    def test_de_morgan(self, a, b):
        assert (a | b).complement() == a.complement() & b.complement()
        assert (a & b).complement() == a.complement() | b.complement()

    @given(interval_sets(), interval_sets())
    def test_against_cell_masks(self, a, b):
        level = 4
        ma, mb = a.to_mask(level), b.to_mask(level)
        assert (a | b).to_mask(level) == ma | mb
        assert (a & b).to_mask(level) == ma & mb
        assert (a ^ b).to_mask(level) == ma ^ mb
        assert (a - b).to_mask(level) == ma & ~mb

    @given(interval_sets())
    def test_boolean_identities(self, a):
        assert a ^ a == EMPTY
        assert a | a.complement() == FULL
        assert a & a.complement() == EMPTY
        assert a.complement().complement() == a

    @given(interval_sets())
    def test_lebesgue_complement(self, a):
        assert lebesgue(a) + lebesgue(a.complement()) == 1

    def test_lebesgue_examples(self):
        assert lebesgue(EMPTY) == 0
        assert lebesgue(FULL) == 1
        assert lebesgue(S(("0", "1/4"), ("1/2", "3/4"))) == Fraction(1, 2)

    @given(st.integers(0, 12), st.data())
    def test_atom_identities(self, n, data):
        a, b = data.draw(atom_sets(n)), data.draw(atom_sets(n))
        assert (a | b).complement() == a.complement() & b.complement()
        assert a ^ a == AtomSet.empty(n)
        assert a | a.complement() == AtomSet.full(n)

    @given(interval_sets())
    def test_mask_roundtrip(self, a):
        assert IntervalUnionSet.from_mask(a.to_mask(5), 5) == a


class TestText:
    def test_literal_format(self):
        text = '[["0","1/2"],["3/4","7/8"]]'
        s = IntervalUnionSet.from_json(json.loads(text))
        assert s == S(("0", "1/2"), ("3/4", "7/8"))
        assert json.dumps(s.to_json(), separators=(",", ":")) == text

    def test_bad_fraction_names_field(self):
        with pytest.raises(InputError, match=r"set\[0\]\[1\]"):
            IntervalUnionSet.from_json([["0", "1/0"]])

    def test_atoms(self):
        assert AtomSet.from_json([0, 2], 3) == AtomSet((True, False, True))


def brute_force_unions(level, max_components):
    """Every canonical union of level-``level`` cells with at most ``max_components`` runs."""
    n = 1 << level
    found = set()
    for members in itertools.product([False, True], repeat=n):
        s = IntervalUnionSet.from_cells(members, level)
        if s.components <= max_components:
            found.add(s)
    return found


class TestFamily:
    def test_level1_single_component(self):
        fam = enumerate_family(1, 1)
        items = fam.items
        assert fam.count == 4
        assert set(items) == {EMPTY, S(("0", "1/2")), S(("1/2", "1")), FULL}
        # components first, then lexicographic on endpoints
        assert items == (EMPTY, S(("0", "1/2")), FULL, S(("1/2", "1")))

    @pytest.mark.parametrize("level,b", [(0, 1), (1, 1), (1, 2), (2, 1), (2, 2), (3, 1), (3, 2), (3, 3), (3, 4)])
    def test_count_matches_brute_force(self, level, b):
        assert enumerate_family(level, b).count == len(brute_force_unions(level, b))

    def test_level2_two_components(self):
        assert enumerate_family(2, 2).count == len(brute_force_unions(2, 2)) == 16

    @pytest.mark.parametrize("level,b", [(0, 1), (1, 1), (2, 2), (3, 2), (3, 3)])
    def test_first_item_is_empty(self, level, b):
        fam = enumerate_family(level, b)
        assert fam.item(1) == EMPTY
        assert fam.items[0] == EMPTY

    @pytest.mark.parametrize("level,b", [(2, 1), (2, 2), (3, 2), (3, 4)])
    def test_order_is_components_then_endpoints(self, level, b):
        expected = sorted(
            brute_force_unions(level, b),
            key=lambda s: (s.components, [x for iv in s.intervals for x in iv]),
        )
        assert list(enumerate_family(level, b).items) == expected

    @pytest.mark.parametrize("level,b", [(2, 2), (3, 2), (3, None)])
    def test_no_duplicates_and_all_cells(self, level, b):
        items = enumerate_family(level, b).items
        assert len(set(items)) == len(items)
        for i in range(1 << level):
            assert IntervalUnionSet.cell(i, level) in items

    def test_endpoint_levels_and_caps(self):
        fam = enumerate_family(3, 2)
        assert all(s.level <= 3 and s.components <= 2 for s in fam)

    @pytest.mark.parametrize("level,b", [(2, 2), (3, 3), (3, None)])
    def test_item_index_roundtrip(self, level, b):
        fam = enumerate_family(level, b)
        for i, s in enumerate(fam, start=1):
            assert fam.index_of(s) == i
            assert fam.item(i) == s

    def test_deterministic(self):
        assert enumerate_family(3, 2).items == enumerate_family(3, 2).items

    def test_huge_family_is_implicit(self):
        fam = IntervalFamily(8)
        assert fam.count > 2**255
        s = S(("1/256", "3/256"), ("1/2", "1"))
        assert fam.item(fam.index_of(s)) == s
        with pytest.raises(InputError):
            fam.items

    def test_atom_family(self):
        fam = AtomFamily(3)
        items = fam.items
        assert len(items) == 8 and items[0] == AtomSet.empty(3)
        assert [s.indices for s in items] == [(), (0,), (1,), (2,), (0, 1), (0, 2), (1, 2), (0, 1, 2)]
        for i, s in enumerate(items, 1):
            assert fam.index_of(s) == i

    @given(st.integers(1, 12), st.data())
    def test_comb_rank_roundtrip(self, n, data):
        k = data.draw(st.integers(0, n))
        combo = tuple(sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=k, max_size=k))))
        r = comb_rank(combo, n)
        assert comb_unrank(r, n, k) == combo
        assert r == list(itertools.combinations(range(n), k)).index(combo)
