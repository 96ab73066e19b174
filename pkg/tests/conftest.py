import numpy as np
import pytest


def random_orthogonal(rng, r):
    q, R = np.linalg.qr(rng.standard_normal((r, r)))
    return q * np.sign(np.diag(R))


def random_spd(rng, d, floor=0.5):
    A = rng.standard_normal((d, d))
    return A @ A.T / d + floor * np.eye(d)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def record_acceptance(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
