"""Concave penalty families and their local linear / quadratic approximations.

All functions work on the extended real line: a derivative of ``+inf`` at the
origin (bridge, logarithm) means the coordinate is pinned at zero downstream,
and the logarithm penalty has value ``-inf`` at zero.  Nothing is clamped
here; callers decide what infinities mean.
"""

import math
from dataclasses import dataclass

SCAD_DEFAULT_A = 3.7

FAMILIES = ("scad", "lq", "log", "l1")

#: families of the form p_lam(t) = lam * p(t) with p'(t) > 0 wherever finite
TYPE1_FAMILIES = ("lq", "log", "l1")


@dataclass(frozen=True)
class PenaltySpec:
    """A penalty family together with its regularization level.

    ``family`` is one of ``"scad"``, ``"lq"``, ``"log"``, ``"l1"``.  The SCAD
    knee parameter ``a`` must exceed 2 (3.7 by default); the bridge exponent
    ``q`` must lie in (0, 1).  Both are ignored by the families that do not
    use them.
    """

    family: str
    lam: float
    a: float = SCAD_DEFAULT_A
    q: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown penalty family {self.family!r}")
        if not self.lam >= 0.0:
            raise ValueError("lambda must be nonnegative")
        if self.family == "scad" and not self.a > 2.0:
            raise ValueError("SCAD requires a > 2")
        if self.family == "lq" and not 0.0 < self.q < 1.0:
            raise ValueError("bridge penalty requires 0 < q < 1")

    @property
    def is_type1(self) -> bool:
        return self.family in TYPE1_FAMILIES


def value(p: PenaltySpec, t: float) -> float:
    """Penalty value p_lam(t) for t >= 0.

    SCAD uses the exact piecewise integral of its derivative; the logarithm
    penalty returns ``-inf`` at t = 0.
    """
    if t < 0.0:
        raise ValueError("penalty argument must be nonnegative")
    lam = p.lam
    if lam == 0.0:
        return 0.0
    if p.family == "l1":
        return lam * t
    if p.family == "lq":
        return lam * t ** p.q
    if p.family == "log":
        return -math.inf if t == 0.0 else lam * math.log(t)
    a = p.a
    if t <= lam:
        return lam * t
    if t <= a * lam:
        return (2.0 * a * lam * t - t * t - lam * lam) / (2.0 * (a - 1.0))
    return (a + 1.0) * lam * lam / 2.0


def derivative(p: PenaltySpec, t: float) -> float:
    """One-sided derivative p'_lam(t), using the right derivative at t = 0.

    Returns ``+inf`` where the derivative diverges (bridge and logarithm at
    the origin).
    """
    if t < 0.0:
        raise ValueError("penalty argument must be nonnegative")
    lam = p.lam
    if lam == 0.0:
        return 0.0
    if p.family == "l1":
        return lam
    if p.family == "lq":
        return math.inf if t == 0.0 else lam * p.q * t ** (p.q - 1.0)
    if p.family == "log":
        return math.inf if t == 0.0 else lam / t
    a = p.a
    if t <= lam:
        return lam
    return max(a * lam - t, 0.0) / (a - 1.0)


def unit_derivative(p: PenaltySpec, t: float) -> float:
    """Derivative of the lambda-free profile p(t) for separable families.

    For families with p_lam(t) = lam * p(t) this is p'(t), i.e.
    ``derivative(p, t) / lam``; the column scaling of the one-step working
    design uses it so the single penalty level ``n * lam`` can be applied
    uniformly.  SCAD is not separable in lambda.
    """
    if not p.is_type1:
        from .exceptions import FamilyMismatch

        raise FamilyMismatch("lambda-free derivative is defined only for l1/lq/log")
    if t < 0.0:
        raise ValueError("penalty argument must be nonnegative")
    if p.family == "l1":
        return 1.0
    if p.family == "lq":
        return math.inf if t == 0.0 else p.q * t ** (p.q - 1.0)
    return math.inf if t == 0.0 else 1.0 / t


def lqa_coefficient(p: PenaltySpec, t0: float, tau0: float = 0.0) -> float:
    """Quadratic-approximation coefficient p'_lam(t0) / (2 (t0 + tau0)).

    Returns ``+inf`` when the denominator vanishes while the derivative is
    positive, and 0 when the derivative itself is 0.
    """
    if t0 < 0.0 or tau0 < 0.0:
        raise ValueError("t0 and tau0 must be nonnegative")
    d = derivative(p, t0)
    den = 2.0 * (t0 + tau0)
    if den == 0.0:
        return math.inf if d > 0.0 else 0.0
    return d / den


def parse_penalty(text: str) -> PenaltySpec:
    """Parse a penalty from its CLI form, e.g. ``"scad:lambda=2,a=3.7"``.

    Accepted families: ``scad``, ``lq``, ``log``, ``l1``.  ``lambda`` is
    required; ``a`` (scad) and ``q`` (lq) are optional/required respectively.
    """
    head, _, tail = text.strip().partition(":")
    family = head.strip().lower()
    if family not in FAMILIES:
        raise ValueError(f"unknown penalty family {family!r} in {text!r}")
    params = {}
    if tail:
        for item in tail.split(","):
            key, _, val = item.partition("=")
            key = key.strip().lower()
            if not _ or key not in ("lambda", "a", "q"):
                raise ValueError(f"bad penalty parameter {item!r} in {text!r}")
            try:
                params[key] = float(val)
            except ValueError:
                raise ValueError(f"bad numeric value in penalty parameter {item!r}")
    if "lambda" not in params:
        raise ValueError(f"penalty {text!r} is missing lambda=")
    if family == "lq" and "q" not in params:
        raise ValueError("lq penalty requires q=")
    kwargs = {}
    if "a" in params:
        kwargs["a"] = params["a"]
    if "q" in params:
        kwargs["q"] = params["q"]
    return PenaltySpec(family, params["lambda"], **kwargs)


def format_penalty(p: PenaltySpec) -> str:
    """Inverse of :func:`parse_penalty` (canonical form)."""
    if p.family == "scad":
        return f"scad:lambda={p.lam:g},a={p.a:g}"
    if p.family == "lq":
        return f"lq:lambda={p.lam:g},q={p.q:g}"
    return f"{p.family}:lambda={p.lam:g}"
