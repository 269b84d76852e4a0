import numpy as np
import pytest


def random_psd(rng, n, rank=None, complex_=True):
    """``G* G`` with ``G`` of shape ``(rank, n)``."""
    rank = n if rank is None else rank
    G = rng.standard_normal((rank, n))
    if complex_:
        G = G + 1j * rng.standard_normal((rank, n))
    return G.conj().T @ G


def random_matrix(rng, m, n):
    return rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


def record_acceptance(number, title, passed, detail=""):
    """Store one criterion outcome for the terminal summary and echo it."""
    line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'}  {title}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
