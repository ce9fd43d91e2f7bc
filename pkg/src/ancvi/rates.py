"""Closed-form residual bounds for the iteration schemes, and verification of
measured traces against them.

Every bound is evaluated in a gamma^k-factored form so that gamma^-(k+1) never
appears; the equivalence with the textbook fractions is itself under test.
The undiscounted limits are handled analytically (2/(k+1) general, 1/(k+1)
under a monotone start).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadGamma, GammaMismatch

REL_TOL_DEFAULT = 1e-9
ABS_FLOOR = 1e-12

GENERAL = "general"
MONOTONE = "monotone"


def one_minus_pow(gamma: float, m: float) -> float:
    """1 - gamma^m without cancellation for gamma near 1."""
    if gamma == 1.0:
        return 0.0
    return -math.expm1(m * math.log(gamma))


def _check_gamma(gamma: float, allow_one: bool = True) -> None:
    if not (np.isfinite(gamma) and 0.0 < gamma <= 1.0):
        raise BadGamma(gamma)
    if not allow_one and gamma == 1.0:
        raise BadGamma(gamma, "defined only for gamma < 1")


def vi_upper(gamma: float, k: int, dist_opt: float) -> float:
    """(1 + gamma) gamma^k ||u0 - u*||: the classical residual rate."""
    _check_gamma(gamma)
    return (1.0 + gamma) * math.pow(gamma, k) * dist_opt


def anc_upper(gamma: float, k: int, dist: float, regime: str = GENERAL) -> float:
    """Anchored-iteration residual bound times dist.

    general:  (1/gamma - gamma)(1 + 2 gamma - gamma^(k+1)) / (gamma^-(k+1) - gamma^(k+1))
    monotone: same with (1 + gamma - gamma^(k+1)); valid when u0 <= Tu0 or u0 >= Tu0.
    """
    _check_gamma(gamma)
    if regime not in (GENERAL, MONOTONE):
        raise ValueError(f"unknown regime {regime!r}")
    c = 2.0 if regime == GENERAL else 1.0
    if gamma == 1.0:
        return c / (k + 1) * dist
    coeff = 1.0 + c * gamma - math.pow(gamma, k + 1)
    rate = math.pow(gamma, k) * one_minus_pow(gamma, 2) * coeff / one_minus_pow(gamma, 2 * k + 2)
    return rate * dist


def apx_error_term(gamma: float, k: int, eps_max: float, scheme: str = "anc") -> float:
    """Noise contribution to the residual bound after k >= 1 noisy steps.

    anc: (1+gamma)/(1+gamma^(k+1)) * (1-gamma^k)/(1-gamma) * eps_max
    vi:  (1+gamma) * (1-gamma^k)/(1-gamma) * eps_max
    """
    _check_gamma(gamma, allow_one=False)
    if k < 1:
        raise ValueError("noise bounds are stated for k >= 1")
    if scheme not in ("anc", "vi"):
        raise ValueError(f"unknown scheme {scheme!r}")
    geom = one_minus_pow(gamma, k) / (1.0 - gamma)
    term = (1.0 + gamma) * geom * eps_max
    if scheme == "anc":
        term /= 1.0 + math.pow(gamma, k + 1)
    return term


def lower_bound(gamma: float, k: int, dist_opt: float) -> float:
    """gamma^k / sum_{i=0}^{k} gamma^i times dist: the span-condition floor."""
    _check_gamma(gamma)
    if gamma == 1.0:
        return dist_opt / (k + 1)
    return math.pow(gamma, k) * (1.0 - gamma) / one_minus_pow(gamma, k + 1) * dist_opt


def optimality_factor(gamma: float, k: int) -> float:
    """Monotone upper bound over lower bound; lies in [1, 4] for every gamma, k."""
    _check_gamma(gamma)
    if gamma == 1.0:
        return 1.0
    return anc_upper(gamma, k, 1.0, MONOTONE) / lower_bound(gamma, k, 1.0)


# ---------------------------------------------------------------------------
# trace verification


@dataclass(frozen=True)
class BoundInputs:
    """Distances and noise level entering the bounds.

    dist_opt is ||u0 - u*|| against the operator's own fixed point (for the
    undiscounted monotone bound, against the converged limit); dist_anti is
    ||u0 - u-hat*||, required by the optimality-operator bounds for gamma < 1;
    eps_max caps the noise vectors and is needed only by the apx bounds.
    """

    gamma: float
    dist_opt: float
    dist_anti: float | None = None
    eps_max: float | None = None

    def __post_init__(self):
        if self.dist_opt < 0 or (self.dist_anti is not None and self.dist_anti < 0):
            raise ValueError("distances must be nonnegative")
        if self.eps_max is not None and self.eps_max < 0:
            raise ValueError("eps_max must be nonnegative")


@dataclass(frozen=True)
class BoundCheck:
    k: int
    selector: str
    measured: float
    bound: float
    margin: float
    violated: bool


@dataclass
class BoundReport:
    gamma: float
    rel_tol: float
    checks: list[BoundCheck] = field(default_factory=list)

    @property
    def violations(self) -> list[BoundCheck]:
        return [c for c in self.checks if c.violated]

    @property
    def passed(self) -> bool:
        return not self.violations


UPPER_SELECTORS = ("vi", "general", "monotone", "apx-general", "apx-monotone")
LOWER_SELECTORS = ("lower",)


def default_selectors(trace) -> set[str]:
    """Which bounds a trace can be held to, from its variant and start relation."""
    from .solvers import Variant  # local import: solvers depends on this module

    monotone_ok = trace.start_relation in ("lower", "upper", "both")
    if trace.variant is Variant.VI:
        return {"vi"}
    if trace.variant is Variant.APX_ANC_VI:
        sel = {"apx-general"}
        if trace.start_relation in ("upper", "both"):
            sel.add("apx-monotone")
        return sel
    sel = {"general"}
    if trace.gamma == 1.0:
        if trace.start_relation in ("lower", "both"):
            sel.add("monotone")
    elif monotone_ok:
        sel.add("monotone")
    return sel


def _general_dist(trace, inputs: BoundInputs) -> float:
    from .operators import Mode

    if trace.op.mode is Mode.CONSISTENCY or inputs.gamma == 1.0:
        return inputs.dist_opt
    if inputs.dist_anti is None:
        raise ValueError("general optimality bound needs dist_anti")
    return max(inputs.dist_opt, inputs.dist_anti)


def _monotone_dist(trace, inputs: BoundInputs) -> float:
    from .operators import Mode

    if trace.op.mode is Mode.CONSISTENCY or inputs.gamma == 1.0:
        return inputs.dist_opt
    sides = []
    if trace.start_relation in ("lower", "both"):
        sides.append(inputs.dist_opt)
    if trace.start_relation in ("upper", "both"):
        if inputs.dist_anti is None:
            raise ValueError("monotone bound from an upper start needs dist_anti")
        sides.append(inputs.dist_anti)
    if not sides:
        raise ValueError("monotone bound needs a detected start relation")
    return min(sides)


def _evaluate(selector: str, trace, inputs: BoundInputs, k: int) -> float:
    g = inputs.gamma
    if selector == "vi":
        return vi_upper(g, k, inputs.dist_opt)
    if selector == "general":
        return anc_upper(g, k, _general_dist(trace, inputs), GENERAL)
    if selector == "monotone":
        return anc_upper(g, k, _monotone_dist(trace, inputs), MONOTONE)
    if selector == "lower":
        return lower_bound(g, k, inputs.dist_opt)
    if selector in ("apx-general", "apx-monotone"):
        if inputs.eps_max is None:
            raise ValueError("apx bounds need eps_max")
        noise = apx_error_term(g, k, inputs.eps_max, "anc")
        if selector == "apx-general":
            return anc_upper(g, k, _general_dist(trace, inputs), GENERAL) + noise
        if trace.start_relation not in ("upper", "both"):
            raise ValueError("the apx monotone bound is stated for upper starts only")
        if inputs.dist_anti is None:
            raise ValueError("the apx monotone bound needs dist_anti")
        return anc_upper(g, k, inputs.dist_anti, MONOTONE) + noise
    raise ValueError(f"unknown bound selector {selector!r}")


def verify_trace(
    trace,
    inputs: BoundInputs,
    bounds: set[str] | None = None,
    rel_tol: float = REL_TOL_DEFAULT,
) -> BoundReport:
    """Check every selected bound at every applicable k of a trace.

    A bound is flagged violated when it is missed by more than rel_tol
    relative plus an absolute floor of ABS_FLOOR (reference fixed points carry
    solver tolerance, which propagates into the distances).
    """
    if trace.gamma != inputs.gamma:
        raise GammaMismatch(f"trace gamma {trace.gamma} vs inputs gamma {inputs.gamma}")
    selectors = default_selectors(trace) if bounds is None else set(bounds)
    report = BoundReport(gamma=inputs.gamma, rel_tol=rel_tol)
    for selector in sorted(selectors):
        first_k = 1 if selector.startswith("apx") else 0
        for k in range(first_k, trace.iteration_count + 1):
            measured = float(trace.bellman_err[k])
            bound = _evaluate(selector, trace, inputs, k)
            if selector in LOWER_SELECTORS:
                margin = measured - bound
            else:
                margin = bound - measured
            violated = margin < -(rel_tol * abs(bound) + ABS_FLOOR)
            report.checks.append(
                BoundCheck(k, selector, measured, bound, margin, bool(violated))
            )
    return report
