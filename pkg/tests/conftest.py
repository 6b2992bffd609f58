import numpy as np
import pytest

from framepot.geometry import Configuration, FieldTag

ACCEPTANCE_LINES = []


def random_unit_rows(rng, m, n, complex_=True):
    V = rng.normal(size=(m, n))
    if complex_:
        V = V + 1j * rng.normal(size=(m, n))
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def random_config(rng, m, n, field="C"):
    field = FieldTag.parse(field)
    return Configuration(field, random_unit_rows(rng, m, n, field is FieldTag.COMPLEX))


def random_unitary(rng, n, complex_=True):
    Z = rng.normal(size=(n, n))
    if complex_:
        Z = Z + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def brute_potential(V, p):
    """Double loop over pairs, straight from the definition."""
    m = V.shape[0]
    total = 0.0
    for i in range(m):
        for j in range(i + 1, m):
            s = sum(V[i, t] * np.conj(V[j, t]) for t in range(V.shape[1]))
            total += abs(s) ** p
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(20261014)


@pytest.fixture
def acceptance_log():
    def log(criterion, passed, detail=""):
        line = f"{criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
