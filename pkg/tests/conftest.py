import numpy as np
import pytest
from hypothesis import settings

from ymlab.lattice import build_torus

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def g8():
    return build_torus(4, 8, 1.0, 0.25)


@pytest.fixture(scope="session")
def g16():
    return build_torus(4, 16, 1.0, 0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


VERDICTS = {}


@pytest.fixture(scope="session")
def verdict():
    """verdict(n, ok, detail): print and remember one acceptance line."""
    def record(n, ok, detail):
        line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        VERDICTS[n] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
