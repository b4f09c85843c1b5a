import pytest

from lambda_absorb.model import BASIC_SPACE, CascadeParams
from lambda_absorb.trajectory import IntegratorConfig


@pytest.fixture
def canonical():
    return CascadeParams()


@pytest.fixture
def space9():
    return BASIC_SPACE


@pytest.fixture
def cfg():
    return IntegratorConfig()


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
