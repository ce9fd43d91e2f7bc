"""Bellman operator evaluation: consistency, optimality, anti-optimality, and
their Gauss-Seidel sweep variants, plus greedy extraction and fixed points.

Argmax/argmin ties break toward the smallest action index so that runs are
reproducible. Gauss-Seidel sweeps walk coordinates in ascending index order
(states for V, lexicographic (s, a) for Q), each coordinate reading the
partially updated vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .errors import (
    BadGamma,
    ConfigMismatch,
    DimensionMismatch,
    KindMismatch,
    NoConvergence,
)
from .mdp import Kind, Mdp, Policy, ValueFn, induced_kernel, sup_norm

DEFAULT_TOL = 1e-12
MAX_ITER_CAP = 10**6

# Direct solve of the policy-evaluation linear system is O(n^3); above this
# size Banach iteration wins.
DIRECT_SOLVE_MAX = 2000


class Mode(str, Enum):
    CONSISTENCY = "consistency"
    OPTIMALITY = "optimality"
    ANTI_OPTIMALITY = "anti-optimality"
    GS_OPTIMALITY = "gs-optimality"
    GS_ANTI_OPTIMALITY = "gs-anti-optimality"


ANTI_MODES = (Mode.ANTI_OPTIMALITY, Mode.GS_ANTI_OPTIMALITY)
GS_MODES = (Mode.GS_OPTIMALITY, Mode.GS_ANTI_OPTIMALITY)


@dataclass(frozen=True)
class Operator:
    """A Bellman operator bound to an MDP, a kind, and (for consistency) a policy.

    apply_values is a pure function of its input; instances are safe to share
    across threads.
    """

    mdp: Mdp
    mode: Mode
    kind: Kind
    policy: Policy | None = None
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)
    _offset: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "kind", Kind(self.kind))
        if self.mode is Mode.CONSISTENCY:
            if self.policy is None:
                raise ConfigMismatch("consistency operator needs a policy")
            p, r = induced_kernel(self.mdp, self.policy, self.kind)
            object.__setattr__(self, "_matrix", p)
            object.__setattr__(self, "_offset", r)
        elif self.policy is not None:
            raise ConfigMismatch(f"{self.mode.value} operator takes no policy")

    @property
    def length(self) -> int:
        return self.mdp.value_length(self.kind)

    def apply_values(self, x: np.ndarray) -> np.ndarray:
        """Raw ndarray apply; no wrapping or checks. Hot path."""
        mdp = self.mdp
        if self.mode is Mode.CONSISTENCY:
            return self._offset + mdp.gamma * (self._matrix @ x)
        use_min = self.mode in ANTI_MODES
        kern = _kernels.ACTIVE_KERNELS
        if self.mode in GS_MODES:
            fn = kern.v_gs if self.kind is Kind.STATE_VALUE else kern.q_gs
        else:
            fn = kern.v_opt if self.kind is Kind.STATE_VALUE else kern.q_opt
        return fn(mdp.transitions, mdp.rewards, mdp.gamma, x, use_min)

    def check(self, u: ValueFn) -> None:
        if u.kind is not self.kind:
            raise KindMismatch(f"operator kind {self.kind} vs value kind {u.kind}")
        if u.values.size != self.length:
            raise DimensionMismatch(f"value length {u.values.size}, expected {self.length}")


def apply(op: Operator, u: ValueFn) -> ValueFn:
    """Evaluate the operator at u."""
    op.check(u)
    return ValueFn(op.kind, op.apply_values(u.values))


def bellman_error(op: Operator, u: ValueFn) -> float:
    """Fixed-point residual ||Tu - u||_inf."""
    op.check(u)
    return sup_norm(op.apply_values(u.values) - u.values)


def lookahead_table(mdp: Mdp, v: np.ndarray) -> np.ndarray:
    """One-step lookahead r(s,a) + gamma * E[v(s')], shape (n_states, n_actions)."""
    return mdp.rewards + mdp.gamma * np.tensordot(mdp.transitions, v, axes=([2], [0]))


def _extract_policy(mdp: Mdp, u: ValueFn, pick) -> Policy:
    if u.values.size != mdp.value_length(u.kind):
        raise DimensionMismatch("value function does not match the MDP")
    if u.kind is Kind.STATE_VALUE:
        table = lookahead_table(mdp, u.values)
    else:
        table = u.values.reshape(mdp.n_states, mdp.n_actions)
    return Policy.deterministic(pick(table, axis=1), mdp.n_actions)


def greedy_policy(mdp: Mdp, u: ValueFn) -> Policy:
    """Deterministic argmax policy at u; satisfies T^pi u = T* u componentwise."""
    return _extract_policy(mdp, u, np.argmax)


def anti_greedy_policy(mdp: Mdp, u: ValueFn) -> Policy:
    """Deterministic argmin policy at u; satisfies T^pi u = T-hat* u componentwise."""
    return _extract_policy(mdp, u, np.argmin)


def default_max_iter(gamma: float, tol: float) -> int:
    if gamma >= 1.0:
        return MAX_ITER_CAP
    est = 10 * math.ceil(math.log(tol) / math.log(gamma))
    return min(max(est, 1), MAX_ITER_CAP)


def _banach(op: Operator, x0: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    x = x0
    residual = math.inf
    for _ in range(max_iter):
        tx = op.apply_values(x)
        residual = sup_norm(tx - x)
        x = tx
        if residual <= tol:
            return x
    raise NoConvergence(max_iter, residual)


def _anchored_gamma1(op: Operator, x0: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    # Halpern-style iteration from a monotone start; the only route to a fixed
    # point at gamma=1, where plain iteration need not converge.
    tx0 = op.apply_values(x0)
    if np.any(x0 > tx0 + 1e-10):
        raise ConfigMismatch("gamma=1 fixed point needs a start with u <= Tu")
    x = x0
    tx = tx0
    residual = sup_norm(tx - x)
    if residual <= tol:
        return x
    for k in range(1, max_iter + 1):
        beta = 1.0 / (k + 1)
        x = beta * x0 + (1.0 - beta) * tx
        tx = op.apply_values(x)
        residual = sup_norm(tx - x)
        if residual <= tol:
            return x
    raise NoConvergence(max_iter, residual)


def fixed_point(
    op: Operator,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    start: ValueFn | None = None,
) -> ValueFn:
    """Solve Tu = u to residual tol.

    Consistency operators use a direct linear solve of (I - gamma P) u = r up
    to DIRECT_SOLVE_MAX unknowns, Banach iteration beyond that. gamma=1 is
    supported only for the non-anti modes and requires a start with u <= Tu.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    gamma = op.mdp.gamma
    if max_iter is None:
        max_iter = default_max_iter(gamma, tol)
    x0 = np.zeros(op.length) if start is None else start.values.copy()
    if start is not None:
        op.check(start)

    if gamma == 1.0:
        if op.mode in ANTI_MODES:
            raise BadGamma(gamma, "anti-optimality fixed point is defined only for gamma < 1")
        if start is None:
            raise ConfigMismatch("gamma=1 fixed point needs an explicit monotone start")
        return ValueFn(op.kind, _anchored_gamma1(op, x0, tol, max_iter))

    if op.mode is Mode.CONSISTENCY and op.length <= DIRECT_SOLVE_MAX:
        n = op.length
        x = np.linalg.solve(np.eye(n) - gamma * op._matrix, op._offset)
        # Partial-pivot residual is backward-error small; polish the rare
        # leftover above tol with contraction steps.
        for _ in range(max_iter):
            if sup_norm(op.apply_values(x) - x) <= tol:
                return ValueFn(op.kind, x)
            x = op.apply_values(x)
        raise NoConvergence(max_iter, sup_norm(op.apply_values(x) - x))

    return ValueFn(op.kind, _banach(op, x0, tol, max_iter))
