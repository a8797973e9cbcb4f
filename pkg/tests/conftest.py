import numpy as np
import pytest

ACCEPTANCE_LINES: list[str] = []


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hpd(rng, n, ridge=0.1):
    x = crandn(rng, n, n)
    return x @ x.conj().T + ridge * np.eye(n)


def unit_rows(rng, count, n):
    """``count`` random unit vectors in C^n, one per row."""
    y = crandn(rng, count, n)
    return y / np.linalg.norm(y, axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20090514)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
