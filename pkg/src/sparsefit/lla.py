"""One-step, k-step, and fully iterative LLA estimators.

The local linear approximation replaces each penalty term by its tangent
line at the current iterate, so every step is a weighted-L1 least squares
problem.  The one-step estimator starts from the unpenalized MLE and takes a
single step; it is computed through working data that turn the step into a
plain lasso: separable penalties (l1/lq/log) rescale columns by the
lambda-free derivative, SCAD splits coordinates into an unpenalized block U
(derivative zero) and a penalized block V, projects U out, and back-solves.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import glm, penalty, wlasso
from .exceptions import FamilyMismatch, NonConvergence, SingularProjectionWarning
from .penalty import PenaltySpec

#: finite working weights above this cap behave like +inf (coordinate pinned)
WEIGHT_CAP = 1e12

#: curvature floor for working responses that divide by sqrt(D)
_CURV_FLOOR = 1e-8

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 100


@dataclass(frozen=True)
class FitResult:
    """Outcome of a fit: exact-zero coefficients, support, and trace."""

    coefficients: np.ndarray
    support: tuple
    lam: float
    method: str
    objective_trace: tuple
    iterations: int
    intercept: float | None = None
    converged: bool = True

    def __post_init__(self):
        coef = np.array(self.coefficients, dtype=float, copy=True)
        coef.setflags(write=False)
        object.__setattr__(self, "coefficients", coef)
        object.__setattr__(self, "support", tuple(int(j) for j in self.support))


@dataclass(frozen=True)
class WorkingData:
    """Transformed design/response for one LLA step.

    ``u_set`` holds unpenalized model coordinates (zero derivative, plus the
    intercept), ``v_set`` the penalized ones, ``pinned`` those with an
    infinite (or capped) derivative.  ``scale_factors`` map working-problem
    coefficients back to the original parameterization.  For the SCAD route
    the U block is projected out of the response and the V columns; the
    projected pieces are carried alongside.
    """

    wdesign: np.ndarray
    wresponse: np.ndarray
    u_set: tuple
    v_set: tuple
    pinned: tuple
    scale_factors: np.ndarray
    proj_response: np.ndarray | None = None
    proj_design_v: np.ndarray | None = None


def _predictor_indices(d: glm.Dataset):
    """Model-vector indices of the penalized (predictor) coordinates."""
    return range(1, d.n_coef) if d.intercept else range(d.n_coef)


def penalized_objective(d: glm.Dataset, beta, p: PenaltySpec) -> float:
    """Q(beta) = loglik - n * sum_j p_lam(|beta_j|) over predictor slots."""
    beta = np.asarray(beta, dtype=float)
    pen = sum(penalty.value(p, abs(beta[j])) for j in _predictor_indices(d))
    return glm.loglik(d, beta) - d.n * pen


def build_working_data_type1(d: glm.Dataset, b0, p: PenaltySpec) -> WorkingData:
    """Working data for separable penalties: columns divided by p'(|b0_j|).

    Coordinates whose penalized derivative is infinite or above the weight
    cap go to the pinned set; the intercept, when present, is carried as an
    unpenalized column.
    """
    if not p.is_type1:
        raise FamilyMismatch(f"type-1 working data does not admit {p.family!r}")
    b0 = np.asarray(b0, dtype=float)
    M = d.model_matrix
    sqrt_d = np.sqrt(glm.curvature_weights(d, b0))
    mu = M @ b0
    ystar = sqrt_d * mu
    scales = np.ones(d.n_coef)
    u_set, v_set, pinned = [], [], []
    if d.intercept:
        u_set.append(0)
    cols = np.empty_like(M)
    if d.intercept:
        cols[:, 0] = sqrt_d * M[:, 0]
    for j in _predictor_indices(d):
        t = abs(b0[j])
        d_lam = penalty.derivative(p, t)
        pd = penalty.unit_derivative(p, t)
        if d_lam > WEIGHT_CAP:
            pinned.append(j)
            scales[j] = 0.0
            cols[:, j] = 0.0
        else:
            v_set.append(j)
            scale = 1.0 / pd if math.isfinite(pd) and pd > 0.0 else 0.0
            scales[j] = scale
            cols[:, j] = sqrt_d * M[:, j] * scale
    return WorkingData(cols, ystar, tuple(u_set), tuple(v_set), tuple(pinned), scales)


def _column_projector(X):
    """Orthonormal basis of span(X) via SVD; warns when rank deficient."""
    if X.shape[1] == 0:
        return np.zeros((X.shape[0], 0))
    U, s, _ = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        rank = 0
    else:
        rank = int(np.sum(s > s[0] * max(X.shape) * np.finfo(float).eps))
    if rank < X.shape[1]:
        warnings.warn(
            "rank-deficient unpenalized block; using pseudo-inverse projection",
            SingularProjectionWarning,
            stacklevel=3,
        )
    return U[:, :rank]


def build_working_data_type2(d: glm.Dataset, b0, p: PenaltySpec) -> WorkingData:
    """SCAD working data: scale V columns by lambda/p'_lam, project out U."""
    if p.family != "scad":
        raise FamilyMismatch("type-2 working data is the SCAD route")
    b0 = np.asarray(b0, dtype=float)
    M = d.model_matrix
    sqrt_d = np.sqrt(glm.curvature_weights(d, b0))
    mu = M @ b0
    ystar = sqrt_d * mu
    Xstar = sqrt_d[:, None] * M
    scales = np.ones(d.n_coef)
    u_set, v_set = ([0] if d.intercept else []), []
    for j in _predictor_indices(d):
        dj = penalty.derivative(p, abs(b0[j]))
        if dj == 0.0:
            u_set.append(j)
        else:
            v_set.append(j)
            scales[j] = p.lam / dj
            Xstar[:, j] *= scales[j]
    Q = _column_projector(Xstar[:, u_set]) if u_set else None
    Xv = Xstar[:, v_set]
    if Q is not None and Q.shape[1] > 0:
        proj_response = ystar - Q @ (Q.T @ ystar)
        proj_design_v = Xv - Q @ (Q.T @ Xv)
    else:
        proj_response = ystar.copy()
        proj_design_v = Xv.copy()
    return WorkingData(
        Xstar, ystar, tuple(u_set), tuple(v_set), (), scales, proj_response, proj_design_v
    )


def _result_from_model_vector(d, beta_model, lam, method, trace, iterations, converged=True):
    coef, intercept = d.split_coefficients(beta_model)
    support = tuple(int(j) for j in np.flatnonzero(coef))
    return FitResult(coef, support, float(lam), method, tuple(trace), iterations, intercept, converged)


def _lstsq_coef(X, rhs):
    if X.shape[1] == 0:
        return np.zeros(0)
    sol, _, _, _ = np.linalg.lstsq(X, rhs, rcond=None)
    return sol


def _one_step_model_vector(d, p, b0, tol):
    """One LLA step from b0 through the working-data construction."""
    n = d.n
    if p.family == "scad":
        wd = build_working_data_type2(d, b0, p)
        v = list(wd.v_set)
        if v:
            prob = wlasso.WlassoProblem(wd.proj_design_v, wd.proj_response, np.full(len(v), n * p.lam))
            beta_v = wlasso.solve(prob, tol=tol).beta
        else:
            beta_v = np.zeros(0)
        u = list(wd.u_set)
        rhs = wd.wresponse - (wd.wdesign[:, v] @ beta_v if v else 0.0)
        beta_u = _lstsq_coef(wd.wdesign[:, u], rhs)
        beta = np.zeros(d.n_coef)
        for idx, j in enumerate(u):
            beta[j] = beta_u[idx]
        for idx, j in enumerate(v):
            beta[j] = beta_v[idx] * wd.scale_factors[j]
        return beta
    wd = build_working_data_type1(d, b0, p)
    weights = np.full(d.n_coef, n * p.lam)
    for j in wd.u_set:
        weights[j] = 0.0
    for j in wd.pinned:
        weights[j] = np.inf
    prob = wlasso.WlassoProblem(wd.wdesign, wd.wresponse, weights)
    sol = wlasso.solve(prob, tol=tol)
    return sol.beta * wd.scale_factors


def one_step(d: glm.Dataset, p: PenaltySpec, b0=None, tol: float = DEFAULT_TOL) -> FitResult:
    """One-step LLA estimator started from ``b0`` (default: the MLE).

    Builds the working data for the penalty's route, solves the weighted-L1
    problem at penalty level ``n * lam``, and maps the solution back; zeros
    are exact.
    """
    if b0 is None:
        b0 = glm.fit_mle(d)
    b0 = np.asarray(b0, dtype=float)
    beta = _one_step_model_vector(d, p, b0, tol)
    trace = (penalized_objective(d, b0, p), penalized_objective(d, beta, p))
    return _result_from_model_vector(d, beta, p.lam, "one_step", trace, 1)


def _working_response(d, beta, mu, mean):
    """IRLS working pieces sqrt(D) X and sqrt(D) mu + (y - m) / sqrt(D)."""
    if d.family == "gaussian":
        return d.model_matrix, d.response
    w = np.maximum(glm.curvature_weights(d, beta), _CURV_FLOOR)
    sw = np.sqrt(w)
    return sw[:, None] * d.model_matrix, sw * mu + (d.response - mean) / sw


def _lla_weights(d, p, beta):
    """Per-coordinate L1 weights n * p'_lam(|beta_j|), capped to +inf."""
    w = np.zeros(d.n_coef)
    for j in _predictor_indices(d):
        dj = penalty.derivative(p, abs(beta[j]))
        w[j] = np.inf if dj > WEIGHT_CAP else d.n * dj
    return w


def _pen_loglik(d, beta, w):
    pen = 0.0
    for j, wj in enumerate(w):
        if beta[j] != 0.0:
            if not np.isfinite(wj):
                return -np.inf
            pen += wj * abs(beta[j])
    return glm.loglik(d, beta) - pen


def _argmax_penalized_loglik(d, w, start, tol, max_inner=100):
    """Maximize loglik(beta) - sum w_j |beta_j| by proximal Newton steps.

    Gaussian likelihoods are quadratic, so a single weighted-lasso solve is
    exact; other families iterate reweighted quadratic expansions with a
    backtracking ascent check until the step is full and small.
    """
    if d.family == "gaussian":
        prob = wlasso.WlassoProblem(d.model_matrix, d.response, w)
        return wlasso.solve(prob, tol=tol, x0=start).beta
    beta = np.where(np.isinf(w), 0.0, np.asarray(start, dtype=float))
    fb = _pen_loglik(d, beta, w)
    for _ in range(max_inner):
        mu = d.model_matrix @ beta
        mean = glm.mean_response(d, mu)
        Xw, yw = _working_response(d, beta, mu, mean)
        cand = wlasso.solve(wlasso.WlassoProblem(Xw, yw, w), tol=tol, x0=beta).beta
        step = cand - beta
        delta = float(np.max(np.abs(step))) if step.size else 0.0
        fn = _pen_loglik(d, cand, w)
        if fn >= fb - 1e-12:
            beta, fb = cand, fn
            if delta <= tol:
                return beta
            continue
        t = 0.5
        while t > 1e-10:
            trial = beta + t * step
            ft = _pen_loglik(d, trial, w)
            if ft >= fb - 1e-12:
                beta, fb = trial, ft
                break
            t *= 0.5
        else:
            return beta  # no ascent direction left: numerically stationary
    raise NonConvergence("inner penalized-likelihood maximization did not converge")


def k_step(d: glm.Dataset, p: PenaltySpec, b0=None, k: int = 1,
           tol: float = DEFAULT_TOL) -> FitResult:
    """k iterations of the one-step construction.

    The first step is exactly :func:`one_step`; later steps re-expand the
    likelihood quadratic (gradient included) at the new iterate and resolve
    the tangent-weighted lasso.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if b0 is None:
        b0 = glm.fit_mle(d)
    b0 = np.asarray(b0, dtype=float)
    beta = _one_step_model_vector(d, p, b0, tol)
    trace = [penalized_objective(d, b0, p), penalized_objective(d, beta, p)]
    for _ in range(k - 1):
        w = _lla_weights(d, p, beta)
        mu = d.model_matrix @ beta
        mean = glm.mean_response(d, mu)
        Xw, yw = _working_response(d, beta, mu, mean)
        beta = wlasso.solve(wlasso.WlassoProblem(Xw, yw, w), tol=tol, x0=beta).beta
        trace.append(penalized_objective(d, beta, p))
    method = "one_step" if k == 1 else f"k_step({k})"
    return _result_from_model_vector(d, beta, p.lam, method, trace, k)


def full_lla(d: glm.Dataset, p: PenaltySpec, b0=None, tol: float = DEFAULT_TOL,
             max_iter: int = DEFAULT_MAX_ITER) -> FitResult:
    """Iterate LLA steps to a fixed point, monitoring the ascent of Q.

    Each step maximizes the tangent minorization exactly (inner tolerance
    tol/10), so the recorded Q trace is nondecreasing.  Only penalties that
    are bounded at zero and have finite derivatives are admitted (scad, l1);
    the logarithm penalty makes Q unbounded and is one-step only.
    """
    if p.family not in ("scad", "l1"):
        raise FamilyMismatch("full LLA requires a bounded penalty (scad or l1)")
    if b0 is None:
        b0 = glm.fit_mle(d)
    beta = np.asarray(b0, dtype=float).copy()
    trace = [penalized_objective(d, beta, p)]
    for it in range(1, max_iter + 1):
        w = _lla_weights(d, p, beta)
        new = _argmax_penalized_loglik(d, w, beta, tol / 10.0)
        trace.append(penalized_objective(d, new, p))
        delta = float(np.max(np.abs(new - beta)))
        beta = new
        if delta <= tol:
            return _result_from_model_vector(d, beta, p.lam, "full_lla", trace, it)
    partial = _result_from_model_vector(
        d, beta, p.lam, "full_lla", trace, max_iter, converged=False
    )
    raise NonConvergence(f"LLA did not converge in {max_iter} iterations", result=partial)


def _psolve(A, B):
    """Solve A X = B for a symmetric PSD block, pseudo-inverting if needed."""
    if A.shape[0] == 0:
        return np.zeros(B.shape) if B.ndim > 1 else np.zeros(0)
    try:
        return np.linalg.solve(A, B)
    except np.linalg.LinAlgError:
        warnings.warn(
            "rank-deficient unpenalized block; using pseudo-inverse projection",
            SingularProjectionWarning,
            stacklevel=3,
        )
        return np.linalg.pinv(A) @ B


def one_step_lambda_max(d: glm.Dataset, p: PenaltySpec, b0=None) -> float:
    """Smallest lambda at which the one-step fit keeps no penalized coordinate."""
    if b0 is None:
        b0 = glm.fit_mle(d)
    b0 = np.asarray(b0, dtype=float)
    if p.family != "scad":
        base = PenaltySpec(p.family, 1.0, a=p.a, q=p.q)
        wd = build_working_data_type1(d, b0, base)
        u = np.zeros(d.n_coef)
        u[list(wd.v_set)] = d.n
        u[list(wd.pinned)] = np.inf
        prob = wlasso.WlassoProblem(wd.wdesign, wd.wresponse, u)
        return wlasso.lambda_max(prob)
    # SCAD: for lambda >= max |b0_j| every predictor weight is n*lambda, so
    # the all-zero threshold is the larger of that bound and the usual
    # correlation bound on the unscaled working data.
    H = glm.neg_hessian(d, b0)
    bvec = H @ b0
    pred = list(_predictor_indices(d))
    if d.intercept:
        h00 = H[0, 0]
        corr = np.array([bvec[j] - H[j, 0] * (bvec[0] / h00 if h00 > 0 else 0.0) for j in pred])
    else:
        corr = bvec[pred]
    lam_corr = float(np.max(np.abs(corr))) / d.n if pred else 0.0
    lam_beta = float(np.max(np.abs(b0[pred]))) if pred else 0.0
    return max(lam_corr, lam_beta) * (1.0 + 1e-10)


def one_step_path(d: glm.Dataset, p: PenaltySpec, lambda_grid, b0=None,
                  tol: float = DEFAULT_TOL):
    """One-step fits along a descending lambda grid, warm-started.

    Separable penalties share a single working problem across the grid; the
    SCAD route is re-solved per grid point (its U/V split changes with
    lambda) in the Gram domain so the per-point cost does not grow with n.
    Entries that fail to fit are returned as None.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("lambda grid must be a nonempty vector")
    if np.any(np.diff(grid) >= 0.0):
        raise ValueError("lambda grid must be strictly descending")
    if b0 is None:
        b0 = glm.fit_mle(d)
    b0 = np.asarray(b0, dtype=float)
    n = d.n

    if p.family != "scad":
        base = PenaltySpec(p.family, 1.0, a=p.a, q=p.q)
        wd = build_working_data_type1(d, b0, base)
        G = wd.wdesign.T @ wd.wdesign
        bvec = wd.wdesign.T @ wd.wresponse
        u_profile = np.zeros(d.n_coef)
        u_profile[list(wd.v_set)] = n
        u_profile[list(wd.pinned)] = np.inf
        out = []
        warm = None
        for lam in grid:
            spec = PenaltySpec(p.family, float(lam), a=p.a, q=p.q)
            try:
                w = np.where(np.isinf(u_profile), np.inf, lam * u_profile)
                beta_star, _, _ = wlasso.solve_gram(G, bvec, w, tol=tol, x0=warm)
                warm = beta_star
                beta = beta_star * wd.scale_factors
                trace = (penalized_objective(d, b0, spec), penalized_objective(d, beta, spec))
                out.append(_result_from_model_vector(d, beta, lam, "one_step", trace, 1))
            except (NonConvergence, np.linalg.LinAlgError):
                out.append(None)
        return out

    H = glm.neg_hessian(d, b0)
    bvec = H @ b0
    pred = list(_predictor_indices(d))
    out = []
    prev_beta = None
    for lam in grid:
        spec = PenaltySpec("scad", float(lam), a=p.a)
        try:
            scales = np.ones(d.n_coef)
            u_idx = [0] if d.intercept else []
            v_idx = []
            for j in pred:
                dj = penalty.derivative(spec, abs(b0[j]))
                if dj == 0.0:
                    u_idx.append(j)
                else:
                    v_idx.append(j)
                    scales[j] = lam / dj
            s = scales
            Gs = (s[:, None] * H) * s[None, :]
            bs = s * bvec
            A = Gs[np.ix_(u_idx, u_idx)]
            if v_idx:
                Gvu = Gs[np.ix_(v_idx, u_idx)]
                if u_idx:
                    K = _psolve(A, np.column_stack([Gvu.T, bs[u_idx]]))
                    Gschur = Gs[np.ix_(v_idx, v_idx)] - Gvu @ K[:, :-1]
                    bschur = bs[v_idx] - Gvu @ K[:, -1]
                else:
                    Gschur = Gs[np.ix_(v_idx, v_idx)]
                    bschur = bs[v_idx]
                warm = None
                if prev_beta is not None:
                    warm = np.array([prev_beta[j] / s[j] if s[j] != 0 else 0.0 for j in v_idx])
                beta_v, _, _ = wlasso.solve_gram(
                    Gschur, bschur, np.full(len(v_idx), n * lam), tol=tol, x0=warm
                )
            else:
                beta_v = np.zeros(0)
            beta = np.zeros(d.n_coef)
            if u_idx:
                rhs = bs[u_idx] - (Gs[np.ix_(u_idx, v_idx)] @ beta_v if v_idx else 0.0)
                beta_u = _psolve(A, rhs)
                for i, j in enumerate(u_idx):
                    beta[j] = beta_u[i]
            for i, j in enumerate(v_idx):
                beta[j] = beta_v[i] * s[j]
            prev_beta = beta
            trace = (penalized_objective(d, b0, spec), penalized_objective(d, beta, spec))
            out.append(_result_from_model_vector(d, beta, lam, "one_step", trace, 1))
        except (NonConvergence, np.linalg.LinAlgError):
            out.append(None)
    return out
