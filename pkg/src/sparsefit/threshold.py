"""Orthogonal-design thresholding rules, exact and one-step.

``exact_rule`` minimizes 0.5 (z - theta)^2 + p_lam(|theta|) by a dense grid
with golden-section refinement, one implementation for every family (several
of which induce discontinuous rules).  ``one_step_rule`` is the closed-form
soft threshold by the penalty derivative at |z|.  ``emit_curve`` tabulates a
rule over a z grid and flags jumps.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import penalty
from .penalty import PenaltySpec

GRID_STEP = 1e-4
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

#: a step is flagged when |d theta| exceeds this multiple of the local scale
JUMP_FACTOR = 10.0


def _values(p: PenaltySpec, t: np.ndarray) -> np.ndarray:
    """Vectorized penalty values on |theta| (matches penalty.value pointwise)."""
    lam = p.lam
    if lam == 0.0:
        return np.zeros_like(t)
    if p.family == "l1":
        return lam * t
    if p.family == "lq":
        return lam * t**p.q
    if p.family == "log":
        with np.errstate(divide="ignore"):
            return np.where(t == 0.0, -np.inf, lam * np.log(np.where(t == 0.0, 1.0, t)))
    a = p.a
    return np.where(
        t <= lam,
        lam * t,
        np.where(
            t <= a * lam,
            (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0)),
            (a + 1.0) * lam * lam / 2.0,
        ),
    )


def _objective(p: PenaltySpec, z: float, theta: np.ndarray) -> np.ndarray:
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    return 0.5 * (z - th) ** 2 + _values(p, np.abs(th))


def _golden_section(f, lo, hi, iters=80):
    a, b = lo, hi
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
    return x1 if f1 <= f2 else x2


def exact_rule(p: PenaltySpec, z: float) -> float:
    """Global minimizer of 0.5 (z - theta)^2 + p_lam(|theta|).

    Dense grid over [-(|z|+1), |z|+1] with step 1e-4, then golden-section
    refinement around the best grid point; exact ties go to the smaller
    |theta|.  The logarithm penalty has value -inf at 0, so its exact rule
    is identically 0.
    """
    half = abs(z) + 1.0
    ts = np.arange(0.0, half + GRID_STEP / 2.0, GRID_STEP)
    grid = np.concatenate([-ts[:0:-1], ts])  # symmetric, contains exact 0.0
    vals = _objective(p, z, grid)
    best = np.min(vals)
    if not np.isfinite(best):  # -inf at the origin (log penalty)
        return 0.0
    ties = np.flatnonzero(vals <= best)
    theta0 = float(grid[ties[np.argmin(np.abs(grid[ties]))]])
    if theta0 == 0.0:
        return 0.0

    def f(t):
        return 0.5 * (z - t) ** 2 + penalty.value(p, abs(t))

    lo, hi = theta0 - GRID_STEP, theta0 + GRID_STEP
    if lo < 0.0 < hi:  # keep the bracket off the nondifferentiable origin
        if theta0 > 0.0:
            lo = 0.0
        else:
            hi = 0.0
    refined = _golden_section(f, lo, hi)
    return float(refined) if f(refined) <= f(theta0) else theta0


def one_step_rule(p: PenaltySpec, z: float) -> float:
    """Soft threshold of z by the penalty derivative at |z|.

    sign(z) (|z| - p'_lam(|z|))_+, with an infinite derivative (bridge or
    logarithm at z = 0) shrinking fully to zero.
    """
    d = penalty.derivative(p, abs(z))
    if not math.isfinite(d):
        return 0.0
    shrunk = abs(z) - d
    return math.copysign(shrunk, z) if shrunk > 0.0 else 0.0


@dataclass(frozen=True)
class CurveTable:
    z: np.ndarray
    theta: np.ndarray
    discontinuities: tuple  # z locations at the left edge of flagged steps


def emit_curve(p: PenaltySpec, mode: str, z_grid) -> CurveTable:
    """Tabulate a thresholding rule over ``z_grid`` with a jump report.

    A step from (z_i, t_i) to (z_{i+1}, t_{i+1}) is flagged when |t_{i+1} -
    t_i| exceeds 10 * (z_{i+1} - z_i) * (1 + max |t|); the factor is a
    heuristic Lipschitz scale.
    """
    if mode not in ("exact", "one_step"):
        raise ValueError("mode must be 'exact' or 'one_step'")
    z = np.asarray(z_grid, dtype=float)
    rule = exact_rule if mode == "exact" else one_step_rule
    theta = np.array([rule(p, float(zi)) for zi in z])
    flags = []
    for i in range(z.size - 1):
        dz = z[i + 1] - z[i]
        if dz <= 0.0:
            continue
        scale = 1.0 + max(abs(theta[i]), abs(theta[i + 1]))
        if abs(theta[i + 1] - theta[i]) > JUMP_FACTOR * dz * scale:
            flags.append(float(z[i]))
    return CurveTable(z, theta, tuple(flags))
