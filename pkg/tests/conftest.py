import numpy as np
import pytest

from lplab import QarParams, QvarParams


@pytest.fixture(scope="session")
def p33() -> QarParams:
    """Benchmark calibration used throughout: phi1=.5, phi2=.2, gamma=.1, sigma=1."""
    return QarParams(phi1=0.5, phi2=0.2, gamma=0.1, sigma=1.0)


def random_stable_qvar(seed: int = 42, n: int = 2, radius: float = 0.6) -> QvarParams:
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    A *= radius / np.max(np.abs(np.linalg.eigvals(A)))
    M = rng.normal(size=(n, n))
    Sigma = M @ M.T + n * np.eye(n)
    Sigma /= np.diag(Sigma).max()
    return QvarParams(
        n=n,
        Phi1=A,
        Phi2=0.15 * rng.normal(size=(n, n * (n + 1) // 2)),
        Gamma=0.1 * rng.normal(size=(n, n)),
        Sigma=Sigma,
    )


@pytest.fixture(scope="session")
def qvar2() -> QvarParams:
    """A seeded random stable 2-dimensional system."""
    return random_stable_qvar(seed=42, n=2)
