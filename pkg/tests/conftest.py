import numpy as np
import pytest

from swolff.exact_sw import make_split

ACCEPTANCE_LINES: dict[int, str] = {}


def random_hermitian(rng, d, norm=1.0):
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    H = (A + A.conj().T) / 2
    return H * (norm / np.linalg.norm(H, 2))


def random_diag_split(rng, d, r, gap=1.0, spread=0.5):
    """Diagonal H0 with r levels in [0, spread] and the rest at least ``gap`` above."""
    low = np.sort(rng.uniform(0.0, spread, r))
    high = np.sort(rng.uniform(spread + gap, spread + gap + 2.0, d - r))
    H0 = np.diag(np.concatenate([low, high])).astype(complex)
    return make_split(H0, (-0.05, spread + 0.05))


def random_split(rng, d, r, gap=1.0):
    """Non-diagonal H0: a diagonal model rotated by a random unitary."""
    base = random_diag_split(rng, d, r, gap)
    Q, _ = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return make_split(Q @ base.H0 @ Q.conj().T, base.window)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
