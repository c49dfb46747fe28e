import math

import numpy as np
import pytest

from eqzero import domain as dom

INV_2PI = 1 / (2 * math.pi)


@pytest.fixture(scope="session")
def disk():
    return dom.disk()


@pytest.fixture(scope="session")
def ellipse():
    return dom.ellipse(0.5)


@pytest.fixture(scope="session")
def unit_weight():
    return dom.constant_weight(1.0)


@pytest.fixture(scope="session")
def circle_weight():
    """``rho = 1/(2 pi)`` makes the disk basis exactly ``z**j``."""
    return dom.constant_weight(INV_2PI)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_KEY, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(lines):
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request, capsys):
    """Record one pass/fail line for an acceptance criterion.

    ``acceptance(n, ok, detail)`` prints the line immediately and again in
    the terminal summary.
    """

    def record(n, ok, detail):
        ok = bool(ok)
        request.config.stash[ACCEPTANCE_KEY].append((n, ok, detail))
        with capsys.disabled():
            print(f"\ncriterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record
