import numpy as np
import pytest

from plsshrink.estimators import standardize
from plsshrink.krylov import lanczos

CORPUS_SIZE = 100
CORPUS_SEED = 0

_acceptance_lines = []


def make_instance(rng, n=None, p=None):
    """Standard-normal design and a noisy linear response, standardized."""
    p = int(rng.integers(2, 21)) if p is None else p
    n = int(rng.integers(5, 41)) if n is None else n
    X = rng.standard_normal((n, p))
    y = X @ rng.standard_normal(p) + rng.standard_normal(n)
    return standardize(X, y, scale_y=False)


class Instance:
    def __init__(self, data):
        self.data = data
        self.state = lanczos(data.gram, data.cross)

    @property
    def m_star(self):
        return self.state.m_star


@pytest.fixture(scope="session")
def corpus():
    """100 seeded random instances with n <= 40, p <= 20 and their Lanczos runs."""
    rng = np.random.default_rng(CORPUS_SEED)
    return [Instance(make_instance(rng)) for _ in range(CORPUS_SIZE)]


@pytest.fixture
def report():
    """Record one PASS/FAIL line for the acceptance summary."""

    def record(name, ok, detail=""):
        _acceptance_lines.append(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
