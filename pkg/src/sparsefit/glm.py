"""Likelihood families (Gaussian, logistic, Poisson) and the unpenalized MLE.

Conventions: the Gaussian log-likelihood is -(y - mu)^2 / 2 per observation,
so its curvature weight is 1 (not 2); with that convention the one-step
quadratic for general likelihoods reduces exactly to penalized least squares
when the family is Gaussian.  Lambda values are therefore not directly
comparable to implementations built on the unhalved squared-error loss.
The dispersion parameter is never estimated or penalized.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, gammaln

from .exceptions import DataError, NonConvergence, RidgeFallbackWarning, SingularDesign

FAMILIES = ("gaussian", "logistic", "poisson")

_MLE_GRAD_TOL = 1e-10
_MLE_MAX_ITER = 100
_RIDGE_SCALE = 1e-6


@dataclass(frozen=True)
class Dataset:
    """An immutable design/response pair with its likelihood family.

    ``design`` is n x p (predictors only); when ``intercept`` is set the
    model matrix gains a leading all-ones column and model coefficient
    vectors have length p + 1 with the intercept in slot 0.
    """

    design: np.ndarray
    response: np.ndarray
    family: str
    intercept: bool = False
    _model_matrix: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        X = np.array(self.design, dtype=float, copy=True)
        y = np.array(self.response, dtype=float, copy=True)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise ValueError("design must be a nonempty 2-D matrix")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError("response length must match design rows")
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValueError("design and response must be finite")
        if self.family == "logistic" and not np.all((y == 0.0) | (y == 1.0)):
            raise ValueError("logistic responses must be 0/1")
        if self.family == "poisson" and (np.any(y < 0) or np.any(y != np.floor(y))):
            raise ValueError("poisson responses must be nonnegative integers")
        if self.intercept:
            M = np.column_stack([np.ones(X.shape[0]), X])
        else:
            M = X
        for arr in (X, y, M):
            arr.setflags(write=False)
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "response", y)
        object.__setattr__(self, "_model_matrix", M)

    @property
    def n(self) -> int:
        return self.design.shape[0]

    @property
    def p(self) -> int:
        return self.design.shape[1]

    @property
    def n_coef(self) -> int:
        """Length of a model coefficient vector (p, plus 1 with intercept)."""
        return self.p + (1 if self.intercept else 0)

    @property
    def model_matrix(self) -> np.ndarray:
        return self._model_matrix

    def subset_rows(self, idx: np.ndarray) -> "Dataset":
        return Dataset(self.design[idx], self.response[idx], self.family, self.intercept)

    def split_coefficients(self, beta):
        """Split a model vector into (predictor coefficients, intercept | None)."""
        beta = np.asarray(beta, dtype=float)
        if self.intercept:
            return beta[1:], float(beta[0])
        return beta, None


def _check_beta(d: Dataset, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (d.n_coef,):
        raise ValueError(f"expected coefficient vector of length {d.n_coef}, got {beta.shape}")
    return beta


def linear_predictor(d: Dataset, beta) -> np.ndarray:
    return d.model_matrix @ _check_beta(d, beta)


def mean_response(d: Dataset, mu: np.ndarray) -> np.ndarray:
    """Inverse link applied to the linear predictor."""
    if d.family == "gaussian":
        return mu
    if d.family == "logistic":
        return expit(mu)
    return np.exp(mu)


def loglik(d: Dataset, beta) -> float:
    """Total log-likelihood at the model vector ``beta``."""
    mu = linear_predictor(d, beta)
    y = d.response
    if d.family == "gaussian":
        return float(-0.5 * np.sum((y - mu) ** 2))
    if d.family == "logistic":
        return float(np.sum(y * mu - np.logaddexp(0.0, mu)))
    return float(np.sum(y * mu - np.exp(mu) - gammaln(y + 1.0)))


def score(d: Dataset, beta) -> np.ndarray:
    """Gradient of the log-likelihood, X^T (y - E[y|x])."""
    mu = linear_predictor(d, beta)
    return d.model_matrix.T @ (d.response - mean_response(d, mu))


def curvature_weights(d: Dataset, beta) -> np.ndarray:
    """Per-observation negative second derivative of the log-likelihood in mu."""
    mu = linear_predictor(d, beta)
    if d.family == "gaussian":
        return np.ones(d.n)
    if d.family == "logistic":
        pr = expit(mu)
        return pr * (1.0 - pr)
    return np.exp(mu)


def neg_hessian(d: Dataset, beta) -> np.ndarray:
    """X^T D X with D the diagonal of curvature weights."""
    M = d.model_matrix
    w = curvature_weights(d, beta)
    return M.T @ (w[:, None] * M)


def _solve_newton_system(H, g, ridge_fallback):
    """Solve H x = g, optionally stabilizing a singular H with a small ridge."""
    try:
        x = np.linalg.solve(H, g)
        if np.all(np.isfinite(x)):
            return x
    except np.linalg.LinAlgError:
        pass
    if not ridge_fallback:
        raise SingularDesign("X^T D X is numerically singular")
    warnings.warn(
        "singular Newton system; adding a small ridge", RidgeFallbackWarning, stacklevel=3
    )
    ridge = _RIDGE_SCALE * float(np.mean(np.diag(H)))
    if ridge <= 0.0 or not np.isfinite(ridge):
        ridge = _RIDGE_SCALE
    return np.linalg.solve(H + ridge * np.eye(H.shape[0]), g)


def _newton_mle(M: np.ndarray, y: np.ndarray, family: str, ridge_fallback=True) -> np.ndarray:
    """Newton-Raphson MLE on a raw model matrix (no Dataset validation)."""
    d = Dataset.__new__(Dataset)  # lightweight view: bypass re-validation
    object.__setattr__(d, "design", M)
    object.__setattr__(d, "response", y)
    object.__setattr__(d, "family", family)
    object.__setattr__(d, "intercept", False)
    object.__setattr__(d, "_model_matrix", M)

    if family == "gaussian":
        beta, _, rank, _ = np.linalg.lstsq(M, y, rcond=None)
        if rank < M.shape[1]:
            if not ridge_fallback:
                raise SingularDesign("design is rank deficient")
            warnings.warn(
                "rank-deficient design; ridge-stabilized least squares",
                RidgeFallbackWarning,
                stacklevel=3,
            )
            H = M.T @ M
            ridge = _RIDGE_SCALE * float(np.mean(np.diag(H)))
            beta = np.linalg.solve(H + ridge * np.eye(H.shape[0]), M.T @ y)
        return beta

    beta = np.zeros(M.shape[1])
    ll = loglik(d, beta)
    for _ in range(_MLE_MAX_ITER):
        g = score(d, beta)
        if np.max(np.abs(g)) <= _MLE_GRAD_TOL:
            return beta
        H = neg_hessian(d, beta)
        step = _solve_newton_system(H, g, ridge_fallback)
        t = 1.0
        for _ in range(40):
            cand = beta + t * step
            ll_new = loglik(d, cand)
            if np.isfinite(ll_new) and ll_new >= ll - 1e-12:
                break
            t *= 0.5
        else:
            raise NonConvergence("Newton line search failed to find an ascent step")
        beta = beta + t * step
        ll = ll_new
    raise NonConvergence(f"MLE did not converge in {_MLE_MAX_ITER} iterations")


def fit_mle(d: Dataset, ridge_fallback: bool = True) -> np.ndarray:
    """Unpenalized maximum likelihood estimate (the initial estimator).

    Gaussian is solved in a single least-squares solve; logistic and Poisson
    use damped Newton-Raphson until the gradient max-norm drops below 1e-10.
    Raises :class:`SingularDesign` when the Newton system is singular and the
    ridge fallback is disabled, :class:`NonConvergence` after 100 iterations.
    """
    return _newton_mle(d.model_matrix, d.response, d.family, ridge_fallback)


def load_csv(path, response: str, family: str, intercept: bool = False):
    """Read a numeric CSV with a header row into a Dataset.

    The column named ``response`` becomes the response; every other column is
    a predictor, in file order.  Returns ``(dataset, predictor_names)``.
    """
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file")
            header = [h.strip() for h in header]
            rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}")
    if response not in header:
        raise DataError(f"{path}: no column named {response!r}")
    y_col = header.index(response)
    x_cols = [j for j in range(len(header)) if j != y_col]
    if not x_cols:
        raise DataError(f"{path}: no predictor columns")
    try:
        data = np.array([[float(row[j]) for j in range(len(header))] for row in rows])
    except (ValueError, IndexError) as exc:
        raise DataError(f"{path}: non-numeric or ragged row ({exc})")
    if data.shape[0] < 1:
        raise DataError(f"{path}: no data rows")
    try:
        d = Dataset(data[:, x_cols], data[:, y_col], family, intercept)
    except ValueError as exc:
        raise DataError(f"{path}: {exc}")
    return d, [header[j] for j in x_cols]
