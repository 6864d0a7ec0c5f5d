import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "pgrates", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("pgrates")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def series_values(P_pi, r_pi, gamma, n=500):
    """Truncated power series sum_{t<n} gamma^t P^t r: an oracle independent of linear solves."""
    out = np.zeros_like(r_pi)
    term = r_pi.copy()
    for _ in range(n):
        out += term
        term = gamma * P_pi @ term
    return out


ACCEPTANCE_LINES = {}


def record_criterion(number, ok, detail):
    """Store the one-line verdict for an acceptance criterion and echo it."""
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
