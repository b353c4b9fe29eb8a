import numpy as np
from hypothesis import settings, strategies as st

from volterra.simplex import SimplexPoint

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


@st.composite
def points(draw, max_index=30, max_size=8, unit=True):
    """Finite-support points on S (or inside the unit ball when ``unit`` is False)."""
    idx = draw(st.lists(st.integers(1, max_index), min_size=1, max_size=max_size, unique=True))
    w = draw(st.lists(st.floats(0.01, 1.0), min_size=len(idx), max_size=len(idx)))
    idx, w = zip(*sorted(zip(idx, w)))
    w = np.array(w) / np.sum(w)
    if not unit:
        w = w * draw(st.floats(0.1, 1.0))
    return SimplexPoint(idx, w)


seeds = st.integers(0, 2**32 - 1)


# Acceptance criteria append "(number, title, passed, seconds, detail)" here.
ACCEPTANCE: list[tuple[int, str, bool, float, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, ok, secs, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title} ({secs:.2f}s) {detail}")
