import numpy as np
import pytest

from spillnet import VarParams


def random_stationary_params(rng, d, radius=None, correlated_errors=False):
    """A random stationary VAR(1) parameter point with SPD error covariance."""
    a = rng.standard_normal((d, d))
    target = radius if radius is not None else rng.uniform(0.2, 0.9)
    phi = a * (target / np.abs(np.linalg.eigvals(a)).max())
    if correlated_errors:
        b = rng.standard_normal((d, d))
        sigma = b @ b.T + 0.1 * np.eye(d)
    else:
        sigma = np.diag(rng.uniform(0.5, 2.0, size=d))
    return VarParams(phi0=np.zeros(d), phis=(phi,), sigma_a=sigma)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
