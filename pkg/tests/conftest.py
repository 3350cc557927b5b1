import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def hermitian_state(n, rng, off=0.2, spread=1.5):
    """Real regular q and a Hermitian unit-determinant g with off-diagonal entries <= off."""
    from spinrs import RSState
    m = n + 1
    q = np.linspace(spread, -spread, m) + rng.uniform(-0.1, 0.1, m)
    q -= q.mean()
    Z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    H = (Z + Z.conj().T) / 2
    np.fill_diagonal(H, 0)
    H *= off / np.abs(H).max()
    while True:
        g = np.diag(rng.uniform(0.7, 1.6, m)) + H
        det = np.linalg.det(g).real
        if det > 0:
            return RSState(q, g / det ** (1 / m))


def complex_state(n, rng, off=0.2):
    from spinrs import RSState
    m = n + 1
    q = np.linspace(1.5, -1.5, m) + 0.2j * rng.normal(size=m)
    q -= q.mean()
    Z = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    np.fill_diagonal(Z, 0)
    g = np.diag(rng.uniform(0.7, 1.6, m) * np.exp(0.2j * rng.normal(size=m))) \
        + off * Z / np.abs(Z).max()
    g /= np.linalg.det(g) ** (1 / m)
    return RSState(q, g)
