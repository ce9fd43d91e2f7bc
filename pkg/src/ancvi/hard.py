"""Adversarial chain MDP on which no span-condition method can beat the
residual floor gamma^k / sum gamma^i, plus span-condition verification and
the lower-bound confrontation itself.

The chain has a single action: state 1 self-loops, every other state steps
down toward it, and only state 2 pays reward. Its fixed point is
[0, 1, gamma, ..., gamma^(n-2)], so a zero start sits at distance exactly 1.
A shifted variant re-targets the construction at an arbitrary start u0 by
moving the shift into the rewards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadSize, HorizonExceeded, MissingIterates, SpanViolated
from .mdp import Kind, Mdp, ValueFn, sup_norm
from .operators import Operator
from .rates import lower_bound

SPAN_TOL_SCALE = 1e-8


@dataclass(frozen=True)
class HardInstance:
    mdp: Mdp
    u0: ValueFn
    analytic_fixed_point: ValueFn
    n: int


def _chain_transitions(n: int) -> np.ndarray:
    p = np.zeros((n, 1, n))
    p[0, 0, 0] = 1.0
    for j in range(1, n):
        p[j, 0, j - 1] = 1.0
    return p


def _chain_fixed_point(n: int, gamma: float) -> np.ndarray:
    ustar = np.zeros(n)
    ustar[1:] = gamma ** np.arange(n - 1)
    return ustar


def build_hard(n: int, gamma: float) -> HardInstance:
    """Worst-case chain with u0 = 0 and fixed point [0, 1, gamma, ...]."""
    if n < 2:
        raise BadSize(f"need n >= 2 states, got {n}")
    rewards = np.zeros((n, 1))
    rewards[1, 0] = 1.0
    mdp = Mdp(n, 1, _chain_transitions(n), rewards, float(gamma))
    return HardInstance(
        mdp=mdp,
        u0=ValueFn(Kind.STATE_VALUE, np.zeros(n)),
        analytic_fixed_point=ValueFn(Kind.STATE_VALUE, _chain_fixed_point(n, gamma)),
        n=n,
    )


def build_hard_shifted(n: int, gamma: float, u0) -> HardInstance:
    """Worst-case chain re-anchored at an arbitrary start u0.

    Rewards pick up (u0 - gamma P u0) so the operator satisfies the exact
    conjugation T u = T0(u - u0) + u0 against the u0 = 0 instance; the fixed
    point is the base one plus u0 and ||u0 - u*|| stays 1.
    """
    if n < 2:
        raise BadSize(f"need n >= 2 states, got {n}")
    u0 = u0.values if isinstance(u0, ValueFn) else np.asarray(u0, dtype=np.float64)
    if u0.shape != (n,):
        raise BadSize(f"u0 must have length {n}, got shape {u0.shape}")
    p = _chain_transitions(n)
    pu0 = p[:, 0, :] @ u0
    rewards = (u0 - gamma * pu0).reshape(n, 1)
    rewards[1, 0] += 1.0
    mdp = Mdp(n, 1, p, rewards, float(gamma))
    return HardInstance(
        mdp=mdp,
        u0=ValueFn(Kind.STATE_VALUE, u0.copy()),
        analytic_fixed_point=ValueFn(Kind.STATE_VALUE, _chain_fixed_point(n, gamma) + u0),
        n=n,
    )


def chain_limit(instance: HardInstance, max_sweeps: int | None = None) -> ValueFn:
    """Numerically reach the iteration limit from u0 on a chain instance.

    On the chain, plain operator iteration from u0 stabilizes exactly within
    n steps (the reward front walks up once), so this works even at gamma=1
    where generic fixed points are non-unique; the result is the minimal
    fixed point above u0.
    """
    op = Operator(instance.mdp, "optimality", Kind.STATE_VALUE)
    x = instance.u0.values.copy()
    sweeps = max_sweeps if max_sweeps is not None else instance.n + 2
    for _ in range(sweeps):
        tx = op.apply_values(x)
        if np.array_equal(tx, x):
            return ValueFn(Kind.STATE_VALUE, x)
        x = tx
    raise AssertionError("chain iteration failed to stabilize; not a chain instance?")


def span_residuals(trace) -> np.ndarray:
    """Distance of each iterate from u0 + span of the preceding residuals.

    For each i, the least-squares projection of U^i - U^0 onto
    span{T U^j - U^j : j < i} is removed and the sup norm of what remains is
    returned; index 0 is 0 by convention. Requires recorded iterates.
    """
    if trace.iterates is None:
        raise MissingIterates("span check needs record_iterates=True")
    op = trace.op
    iterates = trace.iterates
    u0 = iterates[0]
    residuals = [op.apply_values(u) - u for u in iterates]
    out = np.zeros(len(iterates))
    for i in range(1, len(iterates)):
        basis = np.column_stack(residuals[:i])
        rhs = iterates[i] - u0
        coef, *_ = np.linalg.lstsq(basis, rhs, rcond=None)
        out[i] = sup_norm(basis @ coef - rhs)
    return out


def span_condition_satisfied(trace, tol_scale: float = SPAN_TOL_SCALE) -> bool:
    """True when every span residual is below tol_scale * (1 + ||U^i||)."""
    res = span_residuals(trace)
    scales = np.array([1.0 + sup_norm(u) for u in trace.iterates])
    return bool(np.all(res <= tol_scale * scales))


@dataclass
class LowerBoundReport:
    ks: np.ndarray
    measured: np.ndarray
    lower: np.ndarray
    ratio: np.ndarray
    slack: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.measured >= self.lower - self.slack))


def confront_lower_bound(
    instance: HardInstance,
    trace,
    up_to_k: int | None = None,
    slack: float = 1e-10,
) -> LowerBoundReport:
    """Compare measured residuals on a hard instance against the theoretical
    floor gamma^k / sum gamma^i, for k up to n - 2.

    The trace must start at the instance's u0 and satisfy the span condition;
    asking for k beyond n - 2 exceeds the construction's horizon.
    """
    horizon = instance.n - 2
    if up_to_k is None:
        up_to_k = min(trace.iteration_count, horizon)
    if up_to_k > horizon:
        raise HorizonExceeded(f"k={up_to_k} needs n >= {up_to_k + 2}, instance has n={instance.n}")
    if up_to_k > trace.iteration_count:
        raise ValueError(f"trace has only {trace.iteration_count} iterations")
    if trace.iterates is None:
        raise MissingIterates("confrontation needs recorded iterates")
    if not np.array_equal(trace.iterates[0], instance.u0.values):
        raise ValueError("trace does not start at the instance's u0")
    if not span_condition_satisfied(trace):
        raise SpanViolated("iterates leave u0 + span of previous residuals")

    gamma = instance.mdp.gamma
    ks = np.arange(up_to_k + 1)
    lower = np.array([lower_bound(gamma, int(k), 1.0) for k in ks])
    measured = trace.bellman_err[: up_to_k + 1].copy()
    return LowerBoundReport(ks, measured, lower, measured / lower, slack)
