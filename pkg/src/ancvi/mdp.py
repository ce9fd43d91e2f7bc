"""Finite MDP data model: instances, policies, value functions, validation, ingestion.

Conventions shared by every module:
  - transitions is a dense (n_states, n_actions, n_states) tensor, P[s, a, s'].
  - rewards is (n_states, n_actions).
  - Q-functions are stored flat in row-major (s, a) order.
  - Row-stochasticity is checked to STOCHASTIC_TOL and never repaired silently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import (
    BadBranching,
    BadGamma,
    DimensionMismatch,
    KindMismatch,
    MdpValidationError,
    NonFiniteEntry,
    NonStochasticRow,
)

STOCHASTIC_TOL = 1e-12


class Kind(str, Enum):
    """Value-function kind: per-state (V) or per-state-action (Q)."""

    STATE_VALUE = "v"
    STATE_ACTION_VALUE = "q"


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Mdp:
    """Finite MDP (S, A, P, r, gamma). Immutable; safe to share across threads."""

    n_states: int
    n_actions: int
    transitions: np.ndarray
    rewards: np.ndarray
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "transitions", _freeze(self.transitions))
        object.__setattr__(self, "rewards", _freeze(self.rewards))
        if self.transitions.shape != (self.n_states, self.n_actions, self.n_states):
            raise DimensionMismatch(
                f"transitions shape {self.transitions.shape}, "
                f"expected {(self.n_states, self.n_actions, self.n_states)}"
            )
        if self.rewards.shape != (self.n_states, self.n_actions):
            raise DimensionMismatch(
                f"rewards shape {self.rewards.shape}, "
                f"expected {(self.n_states, self.n_actions)}"
            )

    def with_gamma(self, gamma: float) -> "Mdp":
        """Same dynamics and rewards under a different discount factor."""
        return replace(self, gamma=float(gamma))

    @property
    def n_q(self) -> int:
        return self.n_states * self.n_actions

    def value_length(self, kind) -> int:
        return self.n_states if Kind(kind) is Kind.STATE_VALUE else self.n_q


@dataclass(frozen=True)
class Policy:
    """Per-state action distribution; deterministic policies are one-hot rows."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _freeze(self.probs))
        if self.probs.ndim != 2:
            raise DimensionMismatch("policy table must be 2-D (n_states, n_actions)")

    @classmethod
    def deterministic(cls, actions, n_actions: int) -> "Policy":
        actions = np.asarray(actions, dtype=np.int64)
        probs = np.zeros((actions.size, n_actions))
        probs[np.arange(actions.size), actions] = 1.0
        return cls(probs)

    def actions(self) -> np.ndarray:
        """Argmax action per state (meaningful for deterministic policies)."""
        return np.argmax(self.probs, axis=1)


@dataclass(frozen=True)
class ValueFn:
    """A V- or Q-function; Q values are flat in row-major (s, a) order."""

    kind: Kind
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "values", _freeze(self.values))
        if self.values.ndim != 1:
            raise DimensionMismatch("values must be a flat vector")
        if not np.all(np.isfinite(self.values)):
            raise NonFiniteEntry("ValueFn.values")

    @classmethod
    def zeros(cls, mdp: Mdp, kind) -> "ValueFn":
        return cls(Kind(kind), np.zeros(mdp.value_length(kind)))

    @classmethod
    def constant(cls, mdp: Mdp, kind, value: float) -> "ValueFn":
        return cls(Kind(kind), np.full(mdp.value_length(kind), float(value)))


def validate(mdp: Mdp) -> list:
    """Check all Mdp invariants; return the full list of violations (empty if valid).

    Inputs within STOCHASTIC_TOL of stochastic pass; nothing is renormalized here.
    """
    issues = []
    if not (np.isfinite(mdp.gamma) and 0.0 < mdp.gamma <= 1.0):
        issues.append(BadGamma(mdp.gamma, "must lie in (0, 1]"))
    bad = ~np.isfinite(mdp.transitions)
    for s, a, sp in zip(*np.nonzero(bad)):
        issues.append(NonFiniteEntry(f"transitions[{s}][{a}][{sp}]"))
    bad = ~np.isfinite(mdp.rewards)
    for s, a in zip(*np.nonzero(bad)):
        issues.append(NonFiniteEntry(f"rewards[{s}][{a}]"))
    if not issues or all(isinstance(i, BadGamma) for i in issues):
        sums = mdp.transitions.sum(axis=2)
        neg = mdp.transitions.min(axis=2)
        for s in range(mdp.n_states):
            for a in range(mdp.n_actions):
                if neg[s, a] < 0.0 or abs(sums[s, a] - 1.0) > STOCHASTIC_TOL:
                    issues.append(NonStochasticRow(s, a, sums[s, a]))
    return issues


def require_valid(mdp: Mdp) -> Mdp:
    """Raise MdpValidationError unless validate(mdp) is clean."""
    issues = validate(mdp)
    if issues:
        raise MdpValidationError(issues)
    return mdp


def renormalize(mdp: Mdp) -> Mdp:
    """Explicitly rescale transition rows to sum to one. Never done implicitly."""
    sums = mdp.transitions.sum(axis=2, keepdims=True)
    if np.any(sums <= 0) or np.any(mdp.transitions < 0):
        raise MdpValidationError(validate(mdp))
    return replace(mdp, transitions=mdp.transitions / sums)


def make_garnet(
    n_states: int,
    n_actions: int,
    branching: int,
    reward_scale: float = 1.0,
    seed: int = 0,
    gamma: float = 0.9,
) -> Mdp:
    """Random MDP with a fixed branching factor per (s, a) pair.

    Each (s, a) row places mass on exactly `branching` distinct successor
    states, with weights drawn uniformly from the simplex; rewards are uniform
    on [0, reward_scale]. Identical seeds give bit-identical instances.
    """
    if not 1 <= branching <= n_states:
        raise BadBranching(f"branching {branching} outside [1, {n_states}]")
    if not reward_scale > 0:
        raise ValueError(f"reward_scale must be positive, got {reward_scale}")
    rng = np.random.default_rng(seed)
    transitions = np.zeros((n_states, n_actions, n_states))
    for s in range(n_states):
        for a in range(n_actions):
            succ = rng.choice(n_states, size=branching, replace=False)
            transitions[s, a, succ] = rng.dirichlet(np.ones(branching))
    rewards = rng.uniform(0.0, reward_scale, size=(n_states, n_actions))
    return Mdp(n_states, n_actions, transitions, rewards, float(gamma))


def sup_norm(values: np.ndarray) -> float:
    values = np.asarray(values)
    return float(np.max(np.abs(values))) if values.size else 0.0


def sup_norm_diff(u: ValueFn, w: ValueFn) -> float:
    """max_i |u_i - w_i| for two value functions of the same kind and length."""
    if u.kind is not w.kind:
        raise KindMismatch(f"{u.kind} vs {w.kind}")
    if u.values.shape != w.values.shape:
        raise DimensionMismatch(f"{u.values.shape} vs {w.values.shape}")
    return sup_norm(u.values - w.values)


def induced_kernel(mdp: Mdp, policy: Policy, kind) -> tuple[np.ndarray, np.ndarray]:
    """Transition matrix and reward vector induced by a policy.

    STATE_VALUE: P[s, s'] = sum_a pi(a|s) P(s'|s, a), r[s] = sum_a pi(a|s) r(s, a).
    STATE_ACTION_VALUE: P[(s,a), (s',a')] = P(s'|s,a) pi(a'|s'), r flat (s, a).
    Rows of the returned matrix are stochastic.
    """
    kind = Kind(kind)
    if policy.probs.shape != (mdp.n_states, mdp.n_actions):
        raise DimensionMismatch(
            f"policy shape {policy.probs.shape}, expected {(mdp.n_states, mdp.n_actions)}"
        )
    if kind is Kind.STATE_VALUE:
        p = np.einsum("sa,sap->sp", policy.probs, mdp.transitions)
        r = np.einsum("sa,sa->s", policy.probs, mdp.rewards)
        return p, r
    # (s,a) -> (s',a'): go to s' under P(.|s,a), then pick a' by the policy at s'.
    p = np.einsum("sap,pb->sapb", mdp.transitions, policy.probs)
    p = p.reshape(mdp.n_q, mdp.n_q)
    return p, mdp.rewards.reshape(-1).copy()


MDP_JSON_FIELDS = ("n_states", "n_actions", "gamma", "transitions", "rewards")


def mdp_to_dict(mdp: Mdp) -> dict:
    return {
        "n_states": mdp.n_states,
        "n_actions": mdp.n_actions,
        "gamma": mdp.gamma,
        "transitions": mdp.transitions.tolist(),
        "rewards": mdp.rewards.tolist(),
    }


def mdp_from_dict(data: dict) -> Mdp:
    missing = [f for f in MDP_JSON_FIELDS if f not in data]
    if missing:
        raise MdpValidationError([KeyError(f"missing field {f!r}") for f in missing])
    mdp = Mdp(
        n_states=int(data["n_states"]),
        n_actions=int(data["n_actions"]),
        transitions=np.asarray(data["transitions"], dtype=np.float64),
        rewards=np.asarray(data["rewards"], dtype=np.float64),
        gamma=float(data["gamma"]),
    )
    return require_valid(mdp)


def save_mdp(mdp: Mdp, path) -> None:
    with open(path, "w") as fh:
        json.dump(mdp_to_dict(mdp), fh)
        fh.write("\n")


def load_mdp(path) -> Mdp:
    """Read an MDP from JSON, rejecting anything that fails validation."""
    with open(path) as fh:
        return mdp_from_dict(json.load(fh))
