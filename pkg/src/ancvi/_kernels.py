"""Hot numeric kernels: operator applies and Gauss-Seidel sweeps.

Two interchangeable backends:
  - numpy: vectorized reference implementations, always available.
  - numba: @njit loop kernels, used by default when numba imports.

Set ANCVI_DISABLE_NUMBA=1 to force the numpy path. Both sets stay importable
(NUMPY_KERNELS / NUMBA_KERNELS) so benchmarks and tests can compare them.

All kernels take the raw (n_states, n_actions, n_states) transition tensor,
the (n_states, n_actions) reward table, gamma, and a flat value vector; the
`use_min` flag switches max to min (anti-optimality).
"""

from __future__ import annotations

import os
from typing import Callable, NamedTuple

import numpy as np


class KernelSet(NamedTuple):
    name: str
    v_opt: Callable
    q_opt: Callable
    v_gs: Callable
    q_gs: Callable


# ---------------------------------------------------------------------------
# numpy backend


def _v_lookahead_np(P, r, gamma, u):
    return r + gamma * np.tensordot(P, u, axes=([2], [0]))


def _v_opt_np(P, r, gamma, u, use_min):
    look = _v_lookahead_np(P, r, gamma, u)
    return look.min(axis=1) if use_min else look.max(axis=1)


def _q_opt_np(P, r, gamma, u, use_min):
    u2 = u.reshape(r.shape)
    agg = u2.min(axis=1) if use_min else u2.max(axis=1)
    return (r + gamma * np.tensordot(P, agg, axes=([2], [0]))).reshape(-1)


def _v_gs_np(P, r, gamma, u, use_min):
    out = u.copy()
    for s in range(r.shape[0]):
        cand = r[s] + gamma * (P[s] @ out)
        out[s] = cand.min() if use_min else cand.max()
    return out


def _q_gs_np(P, r, gamma, u, use_min):
    n_s, n_a = r.shape
    out = u.reshape(n_s, n_a).copy()
    agg = out.min(axis=1) if use_min else out.max(axis=1)
    for s in range(n_s):
        for a in range(n_a):
            out[s, a] = r[s, a] + gamma * (P[s, a] @ agg)
            agg[s] = out[s].min() if use_min else out[s].max()
    return out.reshape(-1)


NUMPY_KERNELS = KernelSet("numpy", _v_opt_np, _q_opt_np, _v_gs_np, _q_gs_np)


# ---------------------------------------------------------------------------
# numba backend

NUMBA_KERNELS = None

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

if njit is not None:

    @njit(cache=True)
    def _v_opt_nb(P, r, gamma, u, use_min):
        n_s, n_a = r.shape
        look = np.dot(np.ascontiguousarray(P).reshape(n_s * n_a, n_s), u)
        out = np.empty(n_s)
        for s in range(n_s):
            best = np.inf if use_min else -np.inf
            for a in range(n_a):
                val = r[s, a] + gamma * look[s * n_a + a]
                if (use_min and val < best) or (not use_min and val > best):
                    best = val
            out[s] = best
        return out

    @njit(cache=True)
    def _q_opt_nb(P, r, gamma, u, use_min):
        n_s, n_a = r.shape
        agg = np.empty(n_s)
        for s in range(n_s):
            best = u[s * n_a]
            for a in range(1, n_a):
                val = u[s * n_a + a]
                if (use_min and val < best) or (not use_min and val > best):
                    best = val
            agg[s] = best
        look = np.dot(np.ascontiguousarray(P).reshape(n_s * n_a, n_s), agg)
        out = np.empty(n_s * n_a)
        for i in range(n_s * n_a):
            out[i] = r[i // n_a, i % n_a] + gamma * look[i]
        return out

    @njit(cache=True)
    def _v_gs_nb(P, r, gamma, u, use_min):
        n_s, n_a = r.shape
        out = u.copy()
        for s in range(n_s):
            best = np.inf if use_min else -np.inf
            for a in range(n_a):
                acc = 0.0
                for sp in range(n_s):
                    acc += P[s, a, sp] * out[sp]
                val = r[s, a] + gamma * acc
                if (use_min and val < best) or (not use_min and val > best):
                    best = val
            out[s] = best
        return out

    @njit(cache=True)
    def _q_gs_nb(P, r, gamma, u, use_min):
        n_s, n_a = r.shape
        out = u.copy()
        agg = np.empty(n_s)
        for s in range(n_s):
            best = out[s * n_a]
            for a in range(1, n_a):
                val = out[s * n_a + a]
                if (use_min and val < best) or (not use_min and val > best):
                    best = val
            agg[s] = best
        for s in range(n_s):
            for a in range(n_a):
                acc = 0.0
                for sp in range(n_s):
                    acc += P[s, a, sp] * agg[sp]
                out[s * n_a + a] = r[s, a] + gamma * acc
                best = out[s * n_a]
                for b in range(1, n_a):
                    val = out[s * n_a + b]
                    if (use_min and val < best) or (not use_min and val > best):
                        best = val
                agg[s] = best
        return out

    NUMBA_KERNELS = KernelSet("numba", _v_opt_nb, _q_opt_nb, _v_gs_nb, _q_gs_nb)


def _numba_disabled() -> bool:
    return os.environ.get("ANCVI_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes"}


ACTIVE_KERNELS = NUMPY_KERNELS if (NUMBA_KERNELS is None or _numba_disabled()) else NUMBA_KERNELS


def active_backend() -> str:
    return ACTIVE_KERNELS.name
