"""Iteration schemes over a Bellman operator: plain fixed-point iteration, the
anchored variant, its noisy approximation, and the Gauss-Seidel anchored form.

Every run produces an IterationTrace holding, per iteration k = 0..K, the
anchor weight, the fixed-point residual measured with the exact underlying
operator, optional distances to reference fixed points, and wall-clock ticks.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import BadGamma, ConfigMismatch, MissingIterates
from .mdp import Kind, Mdp, Policy, ValueFn, sup_norm
from .operators import Mode, Operator, greedy_policy
from .rates import one_minus_pow

START_RELATION_TOL = 1e-12


def beta(gamma: float, k: int) -> float:
    """Anchor weight 1 / sum_{i=0}^{k} gamma^(-2i).

    Evaluated as gamma^(2k) (1 - gamma^2) / (1 - gamma^(2k+2)) so small gamma
    and large k never form gamma^(-2i); the undiscounted case is the analytic
    limit 1/(k+1).
    """
    if not (np.isfinite(gamma) and 0.0 < gamma <= 1.0):
        raise BadGamma(gamma, "must lie in (0, 1]")
    if k < 0:
        raise ValueError("k must be nonnegative")
    if gamma == 1.0:
        return 1.0 / (k + 1)
    return math.pow(gamma, 2 * k) * one_minus_pow(gamma, 2) / one_minus_pow(gamma, 2 * k + 2)


class Variant(str, Enum):
    VI = "vi"
    ANC_VI = "anc"
    APX_ANC_VI = "apx"
    GS_ANC_VI = "gs-anc"


ANCHORED = (Variant.ANC_VI, Variant.APX_ANC_VI, Variant.GS_ANC_VI)


@dataclass(frozen=True)
class NoiseSpec:
    """Bounded evaluation noise: componentwise uniform on [-eps_bound, eps_bound].

    The theory only caps the sup norm of each noise vector; uniform is the
    least-informative bounded choice and the seed makes runs reproducible.
    """

    eps_bound: float
    seed: int = 0

    def __post_init__(self):
        if self.eps_bound < 0:
            raise ConfigMismatch("eps_bound must be nonnegative")


@dataclass(frozen=True)
class SolverConfig:
    variant: Variant
    iterations: int
    initial: ValueFn
    noise: NoiseSpec | None = None
    record_iterates: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.iterations < 0:
            raise ConfigMismatch("iterations must be >= 0")
        if (self.noise is not None) != (self.variant is Variant.APX_ANC_VI):
            raise ConfigMismatch("noise spec is required for apx runs and forbidden otherwise")


@dataclass
class IterationTrace:
    """Per-iteration record of a solver run, plus enough metadata to re-derive
    bounds: the operator itself, the start relation (u0 vs Tu0), and the final
    iterate."""

    variant: Variant
    op: Operator
    ks: np.ndarray
    beta: np.ndarray
    bellman_err: np.ndarray
    wall_ns: np.ndarray
    dist_to_opt: np.ndarray | None = None
    dist_to_anti: np.ndarray | None = None
    eps_norms: np.ndarray | None = None
    start_relation: str | None = None
    iterates: list | None = None
    final: np.ndarray | None = None

    @property
    def gamma(self) -> float:
        return self.op.mdp.gamma

    @property
    def n_states(self) -> int:
        return self.op.mdp.n_states

    @property
    def iteration_count(self) -> int:
        return len(self.ks) - 1

    def iterate(self, k: int) -> np.ndarray:
        if self.iterates is None:
            raise MissingIterates("run with record_iterates=True to keep iterates")
        return self.iterates[k]


def _detect_start_relation(x0: np.ndarray, tx0: np.ndarray) -> str | None:
    lower = bool(np.all(x0 <= tx0 + START_RELATION_TOL))
    upper = bool(np.all(x0 >= tx0 - START_RELATION_TOL))
    if lower and upper:
        return "both"
    if lower:
        return "lower"
    if upper:
        return "upper"
    return None


def run(
    op: Operator,
    cfg: SolverConfig,
    ref_opt: ValueFn | None = None,
    ref_anti: ValueFn | None = None,
) -> IterationTrace:
    """Execute cfg.iterations steps of the configured scheme from cfg.initial.

    The residual at every k is measured with the exact operator op, including
    for noisy runs; the noise enters only the iterates. References, when
    given, populate the per-iteration distance columns.
    """
    op.check(cfg.initial)
    if cfg.variant is Variant.GS_ANC_VI and op.mode not in (
        Mode.GS_OPTIMALITY,
        Mode.GS_ANTI_OPTIMALITY,
    ):
        raise ConfigMismatch("gs-anc runs need a Gauss-Seidel operator")
    if cfg.variant is Variant.APX_ANC_VI and op.mode is not Mode.OPTIMALITY:
        raise ConfigMismatch("apx runs are defined for the optimality operator")
    for ref in (ref_opt, ref_anti):
        if ref is not None:
            op.check(ref)

    k_max = cfg.iterations
    gamma = op.mdp.gamma
    anchored = cfg.variant in ANCHORED
    rng = np.random.default_rng(cfg.noise.seed) if cfg.noise is not None else None

    betas = np.full(k_max + 1, np.nan)
    errs = np.empty(k_max + 1)
    wall = np.empty(k_max + 1, dtype=np.int64)
    d_opt = np.empty(k_max + 1) if ref_opt is not None else None
    d_anti = np.empty(k_max + 1) if ref_anti is not None else None
    eps_norms = np.full(k_max + 1, np.nan) if rng is not None else None
    iterates = [] if cfg.record_iterates else None

    x0 = cfg.initial.values.copy()
    x = x0
    tx = None
    start_relation = None
    for k in range(k_max + 1):
        tick = time.perf_counter_ns()
        if k == 0:
            tx = op.apply_values(x)
            start_relation = _detect_start_relation(x, tx)
        else:
            if cfg.variant is Variant.VI:
                x = tx
            else:
                b = beta(gamma, k)
                betas[k] = b
                step = tx
                if rng is not None:
                    eps = rng.uniform(-cfg.noise.eps_bound, cfg.noise.eps_bound, size=x0.size)
                    eps_norms[k] = sup_norm(eps)
                    step = tx + eps
                x = b * x0 + (1.0 - b) * step
            tx = op.apply_values(x)
        wall[k] = time.perf_counter_ns() - tick
        errs[k] = sup_norm(tx - x)
        if d_opt is not None:
            d_opt[k] = sup_norm(x - ref_opt.values)
        if d_anti is not None:
            d_anti[k] = sup_norm(x - ref_anti.values)
        if iterates is not None:
            iterates.append(x.copy())
    if anchored:
        betas[0] = 1.0

    return IterationTrace(
        variant=cfg.variant,
        op=op,
        ks=np.arange(k_max + 1),
        beta=betas,
        bellman_err=errs,
        wall_ns=wall,
        dist_to_opt=d_opt,
        dist_to_anti=d_anti,
        eps_norms=eps_norms,
        start_relation=start_relation,
        iterates=iterates,
        final=x.copy(),
    )


def warm_start(mdp: Mdp, kind, side: str) -> ValueFn:
    """Constant vector (min r)/(1-gamma) for side="lower", (max r)/(1-gamma)
    for side="upper"; guarantees u <= Tu (resp. u >= Tu) under every operator
    mode. Undefined at gamma=1."""
    if mdp.gamma >= 1.0:
        raise BadGamma(mdp.gamma, "warm starts need gamma < 1")
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', got {side!r}")
    bound = mdp.rewards.min() if side == "lower" else mdp.rewards.max()
    u = ValueFn.constant(mdp, kind, bound / (1.0 - mdp.gamma))
    # T-hat* <= T^pi <= T* for every policy, and the sweep variants inherit the
    # relation coordinatewise, so checking the two extreme modes covers all five.
    for mode in (Mode.OPTIMALITY, Mode.ANTI_OPTIMALITY, Mode.GS_OPTIMALITY, Mode.GS_ANTI_OPTIMALITY):
        tu = Operator(mdp, mode, kind).apply_values(u.values)
        ok = (
            np.all(u.values <= tu + START_RELATION_TOL)
            if side == "lower"
            else np.all(u.values >= tu - START_RELATION_TOL)
        )
        if not ok:
            raise AssertionError(f"warm start violates the {side} relation under {mode.value}")
    return u


def extract_policy(mdp: Mdp, trace: IterationTrace) -> Policy:
    """Greedy policy at the trace's final iterate."""
    if trace.final is None:
        raise MissingIterates("trace holds no final iterate")
    return greedy_policy(mdp, ValueFn(trace.op.kind, trace.final))
