import numpy as np
import pytest

from bistochastic.channel import KrausChannel, make_unitary_mixture
from bistochastic.matrix import PAULI

I2 = np.eye(2, dtype=complex)
X, Y, Z = PAULI


def pauli_depolarizing(p):
    """Qubit depolarizing channel written out with Pauli Kraus operators."""
    return KrausChannel([np.sqrt(1 - 3 * p / 4) * I2] + [np.sqrt(p / 4) * s for s in PAULI])


def conj_channel(u):
    return KrausChannel([u])


def half_mixture(u):
    """0.5 id + 0.5 conjugation by u."""
    return make_unitary_mixture([I2, u], [0.5, 0.5])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# -- acceptance summary: one PASS/FAIL line per criterion ----------------------

_criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    prev = _criteria.get(number, (title, "PASS"))[1]
    if report.failed or (report.when == "call" and report.skipped):
        prev = "FAIL"
    _criteria[number] = (title, prev)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, verdict = _criteria[number]
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {title}")
