import pytest

from pllsync import CurrentRef, GridParams


@pytest.fixture
def grid():
    return GridParams()


@pytest.fixture
def unity():
    return CurrentRef(1.0, 0.0)


@pytest.fixture
def reactive():
    return CurrentRef(0.0, -1.0)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
