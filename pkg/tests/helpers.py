"""Shared test utilities: random instances and brute-force operator oracles.

The oracles here are deliberately written as plain Python loops straight from
the defining formulas, independent of the package's kernel implementations.
"""

import numpy as np

from ancvi.mdp import Kind, Mdp, Policy


def random_mdp(rng, n_states=4, n_actions=3, gamma=0.9, reward_spread=1.0):
    transitions = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    rewards = rng.normal(scale=reward_spread, size=(n_states, n_actions))
    return Mdp(n_states, n_actions, transitions, rewards, gamma)


def random_policy(rng, mdp):
    return Policy(rng.dirichlet(np.ones(mdp.n_actions), size=mdp.n_states))


def random_values(rng, mdp, kind):
    return rng.normal(size=mdp.value_length(kind))


def oracle_sup_norm_diff(u, w):
    best = 0.0
    for a, b in zip(u, w):
        best = max(best, abs(a - b))
    return best


def oracle_optimality(mdp, u, kind, use_min=False):
    """Componentwise max/min over actions of the one-step lookahead."""
    pick = min if use_min else max
    n_s, n_a = mdp.n_states, mdp.n_actions
    if Kind(kind) is Kind.STATE_VALUE:
        out = np.empty(n_s)
        for s in range(n_s):
            vals = []
            for a in range(n_a):
                exp = sum(mdp.transitions[s, a, sp] * u[sp] for sp in range(n_s))
                vals.append(mdp.rewards[s, a] + mdp.gamma * exp)
            out[s] = pick(vals)
        return out
    u2 = np.asarray(u).reshape(n_s, n_a)
    out = np.empty((n_s, n_a))
    for s in range(n_s):
        for a in range(n_a):
            exp = sum(
                mdp.transitions[s, a, sp] * pick(u2[sp]) for sp in range(n_s)
            )
            out[s, a] = mdp.rewards[s, a] + mdp.gamma * exp
    return out.reshape(-1)


def oracle_consistency(mdp, policy, u, kind):
    n_s, n_a = mdp.n_states, mdp.n_actions
    if Kind(kind) is Kind.STATE_VALUE:
        out = np.empty(n_s)
        for s in range(n_s):
            acc = 0.0
            for a in range(n_a):
                exp = sum(mdp.transitions[s, a, sp] * u[sp] for sp in range(n_s))
                acc += policy.probs[s, a] * (mdp.rewards[s, a] + mdp.gamma * exp)
            out[s] = acc
        return out
    u2 = np.asarray(u).reshape(n_s, n_a)
    out = np.empty((n_s, n_a))
    for s in range(n_s):
        for a in range(n_a):
            exp = 0.0
            for sp in range(n_s):
                for ap in range(n_a):
                    exp += mdp.transitions[s, a, sp] * policy.probs[sp, ap] * u2[sp, ap]
            out[s, a] = mdp.rewards[s, a] + mdp.gamma * exp
    return out.reshape(-1)


def oracle_gs(mdp, u, kind, use_min=False):
    """Coordinate sweep: each coordinate replaced by that component of the full
    (anti-)optimality operator evaluated at the partially updated vector."""
    out = np.array(u, dtype=float)
    for j in range(out.size):
        out[j] = oracle_optimality(mdp, out, kind, use_min)[j]
    return out
