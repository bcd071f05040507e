import math

import numpy as np
import pytest

from commcert.bell import BellRealization, BiasedCHSH, build_chsh_alpha
from commcert.linalg import SIGMA_X, SIGMA_Y, SIGMA_Z
from commcert.observables import DensityMatrix

X, Y, Z = SIGMA_X, SIGMA_Y, SIGMA_Z
I2 = np.eye(2, dtype=complex)
SQ2 = math.sqrt(2)

ACCEPTANCE_RESULTS = {}


def chsh_optimal_observables():
    return (X, Y), ((X + Y) / SQ2, (X - Y) / SQ2)


def top_vector(w):
    lam, v = np.linalg.eigh(w)
    return v[:, -1]


@pytest.fixture
def chsh_optimal_realization():
    (a0, a1), (b0, b1) = chsh_optimal_observables()
    w = build_chsh_alpha(a0, a1, b0, b1, 1.0)
    return BellRealization(BiasedCHSH(1.0), ((a0, a1), (b0, b1)), DensityMatrix.pure(top_vector(w)))


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    ok = rep.passed if rep.when == "call" else False
    prev = ACCEPTANCE_RESULTS.get(number, (title, True))
    ACCEPTANCE_RESULTS[number] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        title, ok = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {title}")
