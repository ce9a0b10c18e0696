import numpy as np
import pytest

from sparsefit import glm


def orthonormal_gaussian(z, n=None):
    """Gaussian dataset whose design satisfies X'X = n I and whose OLS
    solution is exactly ``z`` (response constructed noiselessly)."""
    z = np.asarray(z, dtype=float)
    p = z.size
    if n is None:
        n = 4 * p
    rng = np.random.default_rng(12345)
    Q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    X = Q * np.sqrt(n)
    return glm.Dataset(X, X @ z, "gaussian")


def random_dataset(seed, n, p, family="gaussian", beta=None, rho=0.5):
    """Small synthetic dataset with AR(rho) covariates."""
    rng = np.random.default_rng(seed)
    idx = np.arange(p)
    chol = np.linalg.cholesky(rho ** np.abs(idx[:, None] - idx[None, :]))
    X = rng.standard_normal((n, p)) @ chol.T
    if beta is None:
        beta = np.zeros(p)
        beta[: min(3, p)] = [2.0, -1.0, 0.5][: min(3, p)]
    mu = X @ beta
    if family == "gaussian":
        y = mu + rng.standard_normal(n)
    elif family == "logistic":
        y = (rng.random(n) < 1.0 / (1.0 + np.exp(-mu))).astype(float)
    else:
        y = rng.poisson(np.exp(np.clip(mu, None, 10.0))).astype(float)
    return glm.Dataset(X, y, family)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
