"""Anchored value iteration for finite MDPs.

Solvers for the plain, anchored, approximate-anchored, and Gauss-Seidel
anchored iterations; closed-form residual bounds with trace verification;
and the worst-case chain instances that make the lower bound bite.
"""

from ._kernels import active_backend
from .errors import AncviError
from .hard import HardInstance, build_hard, build_hard_shifted, confront_lower_bound, span_residuals
from .mdp import (
    Kind,
    Mdp,
    Policy,
    ValueFn,
    induced_kernel,
    load_mdp,
    make_garnet,
    save_mdp,
    sup_norm_diff,
    validate,
)
from .operators import (
    Mode,
    Operator,
    anti_greedy_policy,
    apply,
    bellman_error,
    fixed_point,
    greedy_policy,
)
from .rates import (
    BoundInputs,
    BoundReport,
    anc_upper,
    apx_error_term,
    lower_bound,
    optimality_factor,
    verify_trace,
    vi_upper,
)
from .solvers import (
    IterationTrace,
    NoiseSpec,
    SolverConfig,
    Variant,
    beta,
    extract_policy,
    run,
    warm_start,
)

__version__ = "0.1.0"

__all__ = [
    "AncviError",
    "BoundInputs",
    "BoundReport",
    "HardInstance",
    "IterationTrace",
    "Kind",
    "Mdp",
    "Mode",
    "NoiseSpec",
    "Operator",
    "Policy",
    "SolverConfig",
    "ValueFn",
    "Variant",
    "active_backend",
    "anc_upper",
    "anti_greedy_policy",
    "apply",
    "apx_error_term",
    "bellman_error",
    "beta",
    "build_hard",
    "build_hard_shifted",
    "confront_lower_bound",
    "extract_policy",
    "fixed_point",
    "greedy_policy",
    "induced_kernel",
    "load_mdp",
    "lower_bound",
    "make_garnet",
    "optimality_factor",
    "run",
    "save_mdp",
    "span_residuals",
    "sup_norm_diff",
    "validate",
    "verify_trace",
    "vi_upper",
    "warm_start",
]
