from fractions import Fraction

import pytest
from hypothesis import settings
from hypothesis import strategies as st

from hahnrn.charges import AtomCharge, DensityCharge
from hahnrn.space import AtomSet, IntervalUnionSet

settings.register_profile("default", deadline=None)
settings.load_profile("default")

small_fracs = st.builds(
    Fraction, st.integers(min_value=-6, max_value=6), st.sampled_from([1, 2, 3, 4])
)


@st.composite
def interval_sets(draw, max_level=4):
    level = draw(st.integers(min_value=0, max_value=max_level))
    mask = draw(st.integers(min_value=0, max_value=(1 << (1 << level)) - 1))
    return IntervalUnionSet.from_mask(mask, level)


@st.composite
def density_charges(draw, max_level=3):
    level = draw(st.integers(min_value=0, max_value=max_level))
    return DensityCharge(level, tuple(draw(st.lists(small_fracs, min_size=1 << level, max_size=1 << level))))


@st.composite
def atom_charges(draw, max_atoms=8):
    return AtomCharge(tuple(draw(st.lists(small_fracs, min_size=1, max_size=max_atoms))))


@st.composite
def atom_sets(draw, n):
    return AtomSet(tuple(draw(st.lists(st.booleans(), min_size=n, max_size=n))))


def F(text) -> Fraction:
    return Fraction(text)


@pytest.fixture
def neg_pos():
    """Density -1 on [0,1/2) and 2 on [1/2,1)."""
    return DensityCharge(1, (Fraction(-1), Fraction(2)))


@pytest.fixture
def atoms_123():
    return AtomCharge((Fraction(1), Fraction(-2), Fraction(3)))


# acceptance bookkeeping: one PASS/FAIL line per criterion in the summary
_CRITERIA: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call":
        return
    num, title = mark.args
    ok = rep.passed
    prev = _CRITERIA.get(num, (title, True))
    _CRITERIA[num] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        title, ok = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {title}")
