import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zwanzig import Bare, ReservoirSpec

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def bare_c1():
    """Bare ladder, C**2 = 1, N = 200."""
    return ReservoirSpec(Bare(), C=1.0, N=200)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = {}


@pytest.fixture
def criterion():
    """Record the outcome of an acceptance criterion and assert it."""

    def record(number, title, ok, detail):
        _CRITERIA[number] = (title, bool(ok), detail)
        assert ok, f"criterion {number} ({title}): {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
