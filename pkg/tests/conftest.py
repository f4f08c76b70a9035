import math

import numpy as np
import pytest

from polaron_ccqme.model import BathSpec, SpinBosonSpec, SuperOhmic

GAP = 2.0 * math.sqrt(2.0)


def spin_boson(gamma, beta, h=1.0, epsilon=1.0, omega_c=1.0):
    """``(system, bath)`` for the spin-boson model."""
    bath = BathSpec(beta, SuperOhmic(gamma, omega_c))
    return SpinBosonSpec(epsilon, h, bath).to_system(), bath


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return a + a.conj().T


# ----------------------------------------------------------------------------
# acceptance report: one PASS/FAIL line per criterion in the terminal summary
# ----------------------------------------------------------------------------

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record ``(ok, detail)`` for the calling acceptance test and print it."""

    def record(number, title, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}: {detail}"
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return line

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
