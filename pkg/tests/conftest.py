import numpy as np
import pytest
from scipy.linalg import expm

from typicality_lab import kicked_ising as ki

PI = np.pi
CHAOTIC = dict(J=PI / 4, h=PI / 5, b=PI / 4)
CHAOTIC_FIG5 = dict(J=PI / 4, h=2 * PI / 5, b=PI / 4)
FREE = dict(J=0.0, h=0.0, b=PI / 4)


@pytest.fixture(scope="session")
def chaotic8():
    return ki.build_floquet(ki.KicParams(8, **CHAOTIC))


@pytest.fixture(scope="session")
def free8():
    return ki.build_floquet(ki.KicParams(8, **FREE))


@pytest.fixture
def rng():
    return np.random.default_rng(20240517)


def random_unitary(N, rng):
    z = (rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(N, rng):
    v = rng.normal(size=N) + 1j * rng.normal(size=N)
    return v / np.linalg.norm(v)


def within_sigma(estimate, expected, k=3.0):
    return abs(estimate.mean - expected) <= k * estimate.std_error


def variance_within_sigma(samples, expected, k=3.0):
    """Sample variance against ``expected`` using its large-n standard error."""
    x = np.asarray(samples, dtype=float)
    d = x - x.mean()
    var = d.var(ddof=1)
    se = np.sqrt(max(np.mean(d**4) - np.mean(d**2) ** 2, 0.0) / x.size)
    return abs(var - expected) <= k * se


SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def site_op(op, i, n):
    # bit i of the basis index is spin i, so site i sits at Kronecker position n-1-i
    out = np.eye(1, dtype=complex)
    for k in reversed(range(n)):
        out = np.kron(out, op if k == i else np.eye(2))
    return out


def dense_oracle(n, J, h, b):
    N = 2**n
    H_I = np.zeros((N, N), dtype=complex)
    H_K = np.zeros((N, N), dtype=complex)
    for i in range(n):
        zi = site_op(SZ, i, n)
        H_I += J * zi @ site_op(SZ, (i + 1) % n, n) + h * zi
        H_K += b * site_op(SX, i, n)
    return expm(-1j * H_I) @ expm(-1j * H_K)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
