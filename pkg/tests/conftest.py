from fractions import Fraction as F
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from motsupport.measure import DiscreteMeasure
from motsupport.support import Support

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

DATA = Path(__file__).parent / "data"

YS = tuple(F(k) for k in range(1, 7))
XS = (F(3, 2), F(2), F(5, 2), F(3), F(7, 2), F(4))


@st.composite
def kernel_supports(draw, max_x=3, ys=YS, xs=XS):
    """Supports on which some strictly positive martingale coupling lives."""
    chosen = draw(st.lists(st.sampled_from(xs), min_size=1, max_size=max_x, unique=True))
    paths = set()
    for x in chosen:
        lo = [y for y in ys if y < x]
        hi = [y for y in ys if y > x]
        sec = set(draw(st.lists(st.sampled_from(lo), min_size=1, max_size=len(lo), unique=True)))
        sec |= set(draw(st.lists(st.sampled_from(hi), min_size=1, max_size=len(hi), unique=True)))
        if x in ys and draw(st.booleans()):
            sec.add(x)
        paths |= {(x, y) for y in sec}
    return Support(frozenset(paths))


@st.composite
def measures(draw, max_atoms=4):
    pts = draw(st.lists(st.integers(1, 12), min_size=1, max_size=max_atoms, unique=True))
    raw = draw(st.lists(st.integers(1, 6), min_size=len(pts), max_size=len(pts)))
    tot = sum(raw)
    return DiscreteMeasure.from_pairs((F(p, 2), F(r, tot)) for p, r in zip(pts, raw))


def sec(mapping):
    return Support.from_sections(mapping)


@pytest.fixture
def data_dir():
    return DATA


# one PASS/FAIL line per acceptance criterion, printed at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, line = ACCEPTANCE[num]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {line}")
