import numpy as np
import pytest

from distlqr.config import PRESETS, resolve_config
from distlqr.model import SystemSpec, solve_lyapunov

EXAMPLE1_K = -0.015 * np.array([[56.19, 0.7692, 0.0027],
                                [0.7692, 56.20, 0.7692],
                                [0.0027, 0.7692, 56.19]])
EXAMPLE1_A = np.array([[1.01, 0.01, 0.0], [0.01, 1.01, 0.01], [0.0, 0.01, 1.01]])
EXAMPLE2_SIGMA = np.array([[1.0, 0.5, 0.3], [0.5, 2.0, 0.4], [0.3, 0.4, 2.0]])


def example1_spec(x0=(1.0, 1.0, 1.0)):
    return SystemSpec(EXAMPLE1_A, np.eye(3), np.eye(3), np.eye(3), 0.6, EXAMPLE1_K, x0)


def example3_spec():
    return SystemSpec([[1.0, 0.2], [0.0, 1.0]], [[0.06], [0.20]], 10 * np.eye(2), [[1.0]], 0.6,
                      [[-2.11, -2.56]], [0.0, 0.0])


def scalar_spec(a, p_target=None, gamma=0.5, x0=1.0, q=1.0):
    """Scalar system with closed loop ``a`` (A = a, K = 0). ``p_target`` picks Q so that P = p_target."""
    if p_target is not None:
        q = p_target * (1.0 - gamma * a * a)
    return SystemSpec([[a]], [[1.0]], [[q]], [[1.0]], gamma, [[0.0]], [x0])


def random_stable_spec(rng, n=None, p=None, gamma=None, target_rho=None):
    """Random system whose closed loop is rescaled to a chosen spectral radius below 1/sqrt(gamma)."""
    n = n or int(rng.integers(1, 5))
    p = p or int(rng.integers(1, n + 1))
    gamma = gamma if gamma is not None else float(rng.uniform(0.2, 0.95))
    A = rng.standard_normal((n, n))
    B = rng.standard_normal((n, p))
    K = rng.standard_normal((p, n))
    rho = max(np.abs(np.linalg.eigvals(A + B @ K)).max(), 1e-3)
    target = target_rho if target_rho is not None else float(rng.uniform(0.05, 0.95)) / np.sqrt(gamma)
    s = target / rho
    M = rng.standard_normal((n, n))
    Q = M @ M.T + 0.5 * np.eye(n)
    Mr = rng.standard_normal((p, p))
    R = Mr @ Mr.T + 0.5 * np.eye(p)
    return SystemSpec(s * A, B, Q, R, gamma, s * K, rng.standard_normal(n))


@pytest.fixture(scope="session")
def ex1():
    spec = example1_spec()
    return spec, solve_lyapunov(spec)


@pytest.fixture(scope="session")
def ex3():
    spec = example3_spec()
    return spec, solve_lyapunov(spec)


@pytest.fixture(scope="session")
def example2_cfg():
    return resolve_config(preset="example2")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES: list[str] = []


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
