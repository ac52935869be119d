import numpy as np
import pytest
from hypothesis import strategies as st

from netcpi.iotable import derive
from netcpi.synthetic import fixture_table, random_table


@pytest.fixture
def fixture():
    return fixture_table()


@pytest.fixture
def fixture_stats(fixture):
    return derive(fixture)


@st.composite
def tables(draw, max_n=8, max_f=3, max_m=3, closed=False):
    """Random valid IOTables driven by a hypothesis-chosen seed and shape."""
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, max_n))
    f = draw(st.integers(1, max_f))
    m = draw(st.integers(1, max_m))
    return random_table(np.random.default_rng(seed), n, f, m, closed=closed)


def shocks_for(table, rng, scale=0.02):
    N, F, M = table.shape
    return rng.normal(0, scale, N), rng.normal(0, scale, F), rng.normal(0, scale, M)


from hypothesis import settings  # noqa: E402

settings.register_profile("netcpi", deadline=None, max_examples=60)
settings.load_profile("netcpi")


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, combining its sub-tests."""
    status = {}
    for outcome in ("passed", "failed", "skipped"):
        for rep in terminalreporter.stats.get(outcome, []):
            label = dict(getattr(rep, "user_properties", ())).get("criterion")
            if label is None:
                continue
            name = rep.nodeid.split("::")[-1]
            status.setdefault(label, []).append((outcome, name))
    if not status:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(status, key=lambda s: int(s.split(".")[0])):
        outcomes = status[label]
        failed = [n for o, n in outcomes if o == "failed"]
        if failed:
            verdict = "FAIL (" + ", ".join(failed) + ")"
        elif all(o == "skipped" for o, _ in outcomes):
            verdict = "SKIP"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {label}: {verdict}")
