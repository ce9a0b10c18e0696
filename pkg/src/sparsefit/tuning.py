"""K-fold cross-validation selection of the regularization level.

Folds come from a seeded permutation split into near-equal blocks; the
validation loss is the out-of-fold mean negative log-likelihood (plain mean
squared error for Gaussian data).  The initial estimator of any two-stage
method is re-fit inside each training fold, which is the fitter's job: a
fitter is a callable ``fitter(train_dataset, lambda_grid) -> [FitResult or
None, ...]`` aligned with the grid, with None marking a fold/lambda pair
that failed (those score +inf).
"""

import numpy as np

from . import glm

DEFAULT_FOLDS = 5
DEFAULT_N_LAMBDA = 100
DEFAULT_MIN_RATIO = 1e-3


def default_lambda_grid(lam_max: float, n_points: int = DEFAULT_N_LAMBDA,
                        min_ratio: float = DEFAULT_MIN_RATIO) -> np.ndarray:
    """Log-spaced descending grid from lam_max down to min_ratio * lam_max."""
    if not lam_max > 0.0:
        lam_max = 1.0
    return np.geomspace(lam_max, lam_max * min_ratio, n_points)


def _model_vector(d: glm.Dataset, fit) -> np.ndarray:
    if d.intercept:
        return np.concatenate([[fit.intercept], fit.coefficients])
    return fit.coefficients


def validation_loss(d_val: glm.Dataset, beta_model) -> float:
    """Mean out-of-fold loss: squared error for Gaussian, NLL otherwise."""
    if d_val.family == "gaussian":
        mu = glm.linear_predictor(d_val, beta_model)
        return float(np.mean((d_val.response - mu) ** 2))
    return -glm.loglik(d_val, beta_model) / d_val.n


def cv_select(d: glm.Dataset, fitter, lambda_grid, k: int = DEFAULT_FOLDS,
              seed: int = 0):
    """Pick the loss-minimizing lambda by k-fold cross-validation.

    Returns ``(lambda_star, cv_curve)`` where the curve is a list of
    ``(lambda, mean loss)`` pairs in grid order.  Ties are broken toward the
    larger lambda (the sparser model).  The whole computation is a pure
    function of (dataset, grid, k, seed).
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("lambda grid must be nonempty")
    if k < 2:
        raise ValueError("need at least 2 folds")
    n = d.n
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    folds = np.array_split(perm, k)
    losses = np.zeros((k, grid.size))
    for f, val_idx in enumerate(folds):
        mask = np.ones(n, dtype=bool)
        mask[val_idx] = False
        train = d.subset_rows(np.where(mask)[0])
        val = d.subset_rows(np.sort(val_idx))
        try:
            fits = fitter(train, grid)
        except Exception:
            losses[f, :] = np.inf
            continue
        for i, fit in enumerate(fits):
            if fit is None:
                losses[f, i] = np.inf
            else:
                losses[f, i] = validation_loss(val, _model_vector(d, fit))
    curve = [(float(lam), float(np.mean(losses[:, i]))) for i, lam in enumerate(grid)]
    order = np.argsort(-grid)  # scan from the largest lambda down
    best_i = order[0]
    for i in order:
        if curve[i][1] < curve[best_i][1]:
            best_i = i
    return curve[best_i][0], curve
