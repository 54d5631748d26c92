import numpy as np
import pytest

from daclab.corr_models import TrialSeed, apply_bsc, gen_source


@pytest.fixture
def pair():
    """Factory for a correlated (x, y) block from a fixed seed."""
    def make(n, p0, p, trial=0, master=1234):
        seed = TrialSeed(master, trial)
        x = gen_source(n, p0, seed)
        return x, apply_bsc(x, p, seed)
    return make


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one PASS/FAIL line per acceptance criterion."""
    def emit(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
