import numpy as np
import pytest

from hinfsearch import ClosedLoop, Plant, load_problem


@pytest.fixture(scope="session")
def example13():
    return load_problem("example13")


@pytest.fixture(scope="session")
def exampleD1():
    return load_problem("exampleD1")


@pytest.fixture(scope="session")
def scalar_plant():
    # a = 0.5, b = 1, q = r = 1: with K = 0 the loop is a = 0.5, c = 1 and
    # the exact norm is c / (1 - a) = 2
    return Plant(A=np.array([[0.5]]), B=np.array([[1.0]]),
                 Q=np.array([[1.0]]), R=np.array([[1.0]]))


def random_stable_loop(rng, n, rho_max=0.95):
    """A random Schur-stable closed loop with a random SPD output map."""
    M = rng.standard_normal((n, n))
    rho = np.max(np.abs(np.linalg.eigvals(M)))
    A = (rho_max * rng.uniform(0.3, 1.0) / max(rho, 1e-12)) * M
    X = rng.standard_normal((n, n))
    C = X @ X.T + 0.2 * np.eye(n)
    lam, V = np.linalg.eigh(C)
    C = (V * np.sqrt(lam)) @ V.T
    return ClosedLoop(A_cl=A, C_cl=C)
