"""Exhaustive best-subset selection under AIC/BIC.

Every one of the 2^p predictor subsets is fit by maximum likelihood and
scored as 2*loglik - lam_crit * |subset| with lam_crit = 2 (AIC) or log(n)
(BIC).  Gaussian models use the profile log-likelihood -n log(RSS / n) (the
additive constant cancels in comparisons).  Ties go to the smaller subset,
then lexicographic order.
"""

import itertools
import math

import numpy as np

from . import glm
from .exceptions import TooManyPredictors
from .lla import FitResult

DEFAULT_MAX_P = 20

CRITERIA = ("aic", "bic")


def criterion_multiplier(criterion: str, n: int) -> float:
    if criterion == "aic":
        return 2.0
    if criterion == "bic":
        return math.log(n)
    raise ValueError(f"unknown criterion {criterion!r}")


def enumerate_subset_fits(d: glm.Dataset, max_p: int = DEFAULT_MAX_P):
    """MLE fit and 2*loglik for every predictor subset.

    Returns a list of ``(cols, two_ll, model_beta)`` in (size, lex) order;
    ``model_beta`` is the full-length model vector, zero outside the subset.
    The empty subset is a legal candidate (intercept-only when the dataset
    has an intercept).
    """
    p = d.p
    if p > max_p:
        raise TooManyPredictors(f"p = {p} exceeds the enumeration cap {max_p}")
    M = d.model_matrix
    y = d.response
    n = d.n
    offset = 1 if d.intercept else 0
    gaussian = d.family == "gaussian"
    if gaussian:
        G = M.T @ M
        c = M.T @ y
        yy = float(y @ y)
    out = []
    for size in range(p + 1):
        for cols in itertools.combinations(range(p), size):
            idx = ([0] if d.intercept else []) + [j + offset for j in cols]
            beta = np.zeros(d.n_coef)
            if gaussian:
                if idx:
                    sub = np.linalg.lstsq(G[np.ix_(idx, idx)], c[idx], rcond=None)[0]
                    beta[idx] = sub
                    rss = yy - 2.0 * c[idx] @ sub + sub @ G[np.ix_(idx, idx)] @ sub
                else:
                    rss = yy
                rss = max(float(rss), 1e-300)
                two_ll = -n * math.log(rss / n)
            else:
                if idx:
                    beta[idx] = glm._newton_mle(M[:, idx], y, d.family)
                two_ll = 2.0 * glm.loglik(d, beta)
            out.append((cols, two_ll, beta))
    return out


def select_from_enumeration(fits, criterion: str, n: int):
    """Pick the best-scoring subset from :func:`enumerate_subset_fits` output."""
    lam_crit = criterion_multiplier(criterion, n)
    best = None
    best_score = -math.inf
    for cols, two_ll, beta in fits:
        score = two_ll - lam_crit * len(cols)
        if score > best_score:  # strict: (size, lex) order breaks ties
            best_score = score
            best = (cols, two_ll, beta)
    return best, best_score, lam_crit


def best_subset(d: glm.Dataset, criterion: str = "bic",
                max_p: int = DEFAULT_MAX_P) -> FitResult:
    """Exhaustive best-subset fit under the given criterion.

    Raises :class:`TooManyPredictors` when p exceeds ``max_p``.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    fits = enumerate_subset_fits(d, max_p)
    (cols, two_ll, beta), score, lam_crit = select_from_enumeration(fits, criterion, d.n)
    coef, intercept = d.split_coefficients(beta)
    support = tuple(int(j) for j in np.flatnonzero(coef))
    return FitResult(
        coef,
        support,
        lam_crit,
        "subset",
        (score,),
        len(fits),
        intercept,
        True,
    )
