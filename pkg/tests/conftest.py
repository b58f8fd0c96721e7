from __future__ import annotations

import itertools
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from cdis.graph import ARROW, TAIL, DagWithSelection, MixedGraph  # noqa: E402

settings.register_profile("default", max_examples=150, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

GOLDEN = Path(__file__).parent / "golden"

_MARK = {TAIL: "t", ARROW: "a"}


def to_brute(m: MixedGraph) -> dict:
    """Mixed graph without circles in the dict form used by ``_brute``."""
    out = {}
    for i, j, a, b in m.edges():
        lo, hi = (i, j) if i < j else (j, i)
        ma, mb = (_MARK[a], _MARK[b]) if i < j else (_MARK[b], _MARK[a])
        out[(lo, hi)] = (ma, mb)
    return out


@st.composite
def dags_with_selection(draw, d_min: int = 1, d_max: int = 4, t_max: int = 2) -> DagWithSelection:
    d = draw(st.integers(d_min, d_max))
    order = draw(st.permutations(range(d)))
    edges = [(order[a], order[b]) for a, b in itertools.combinations(range(d), 2) if draw(st.booleans())]
    t = draw(st.integers(0, t_max))
    sel = []
    for _ in range(t):
        parents = draw(st.sets(st.integers(0, d - 1), min_size=1, max_size=min(d, 2)))
        sel.append(tuple(sorted(parents)))
    return DagWithSelection.from_parents(d, edges, sel)


@st.composite
def targets_for(draw, d: int):
    return frozenset(draw(st.sets(st.integers(0, d - 1), max_size=d)))


@pytest.fixture
def clinical() -> DagWithSelection:
    """X1 -> S1 <- X2."""
    return DagWithSelection(2, 1, [(0, 2), (1, 2)])


@pytest.fixture
def chain() -> DagWithSelection:
    """X1 -> X2 -> X3 -> S1."""
    return DagWithSelection(3, 1, [(0, 1), (1, 2), (2, 3)])


@pytest.fixture
def collider_chain() -> DagWithSelection:
    """X1 -> X2 -> S1 <- X3."""
    return DagWithSelection(3, 1, [(0, 1), (1, 3), (2, 3)])


# acceptance verdicts, printed after the run whatever the capture mode

_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record_acceptance(number: int, ok: bool, text: str) -> None:
    _ACCEPTANCE[number] = (ok, text)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        ok, text = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} {text}")
