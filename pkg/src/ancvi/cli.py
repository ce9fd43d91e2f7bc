"""Command-line front end.

Subcommands:
  solve         run solvers on one MDP, write per-iteration CSV traces and
                summary JSON
  verify        run solvers and check every applicable residual bound;
                exit 1 on any violation
  sweep-bounds  tabulate the closed-form bounds over a (gamma, k) grid
  hard          construct a worst-case chain instance and write it out
  validate      check an MDP JSON file against the model invariants

Exit codes: 0 success, 1 bound violation, 2 input error. CSV numerics carry
17 significant digits; wall-clock cells stay empty unless --timing is given
so that reruns with the same seed are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import hard as hard_mod
from . import rates
from .errors import AncviError
from .mdp import Kind, Mdp, ValueFn, load_mdp, make_garnet, mdp_to_dict, save_mdp, sup_norm
from .operators import Mode, Operator, fixed_point
from .rates import ABS_FLOOR, BoundInputs, REL_TOL_DEFAULT, verify_trace
from .solvers import NoiseSpec, SolverConfig, Variant, extract_policy, run, warm_start

CSV_HEADER = "k,beta_k,bellman_err,dist_to_opt,dist_to_anti,bound_general,bound_monotone,bound_lower,wall_ns"

DEFAULT_SWEEP_GARNETS = 50
DEFAULT_SWEEP_GAMMAS = (0.5, 0.9, 0.99)
DEFAULT_SWEEP_SHAPE = dict(n_states=12, n_actions=3, branching=3)
DEFAULT_SWEEP_K = 80
DEFAULT_HARD_CHECK = dict(n=12, k=30)


def fmt17(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if np.isnan(x):
        return ""
    return format(x, ".17g")


def parse_ints(text: str, n: int, what: str) -> list[int]:
    parts = text.split(",")
    if len(parts) != n:
        raise AncviError(f"{what} expects {n} comma-separated values, got {text!r}")
    return [int(p) for p in parts]


def parse_solver(text: str) -> tuple[Variant, float | None]:
    if text == "vi":
        return Variant.VI, None
    if text == "anc":
        return Variant.ANC_VI, None
    if text == "gs-anc":
        return Variant.GS_ANC_VI, None
    if text.startswith("apx:"):
        return Variant.APX_ANC_VI, float(text.split(":", 1)[1])
    raise AncviError(f"unknown solver {text!r}; use vi|anc|apx:EPS|gs-anc")


def solver_tag(variant: Variant, eps: float | None) -> str:
    return f"apx_{eps:g}" if variant is Variant.APX_ANC_VI else variant.value


def parse_grid(text: str, cast):
    """Comma list or inclusive start:stop[:step] range."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (2, 3):
            raise AncviError(f"bad range {text!r}; use start:stop[:step]")
        start, stop = cast(parts[0]), cast(parts[1])
        step = cast(parts[2]) if len(parts) == 3 else cast("1")
        out = []
        v = start
        while v <= stop + 1e-12:
            out.append(cast(f"{v}") if isinstance(v, float) else v)
            v += step
        return out
    return [cast(p) for p in text.split(",")]


def resolve_source(args) -> tuple[Mdp, hard_mod.HardInstance | None, str]:
    given = [x for x in (args.mdp, args.garnet, args.hard) if x]
    if len(given) != 1:
        raise AncviError("give exactly one of --mdp, --garnet, --hard")
    if args.mdp:
        return load_mdp(args.mdp), None, Path(args.mdp).stem
    if args.garnet:
        n, a, b, seed = parse_ints(args.garnet, 4, "--garnet")
        mdp = make_garnet(n, a, b, seed=seed, gamma=args.gamma)
        return mdp, None, f"garnet{n}x{a}b{b}s{seed}"
    parts = args.hard.split(",")
    if len(parts) not in (2, 3):
        raise AncviError("--hard expects n,gamma[,shift-file]")
    n, gamma = int(parts[0]), float(parts[1])
    if len(parts) == 3:
        shift = np.asarray(json.loads(Path(parts[2]).read_text()), dtype=np.float64)
        instance = hard_mod.build_hard_shifted(n, gamma, shift)
    else:
        instance = hard_mod.build_hard(n, gamma)
    return instance.mdp, instance, f"hard{n}g{gamma:g}"


def resolve_start(args, mdp: Mdp, instance) -> ValueFn:
    warm = args.warm
    if warm is None:
        return instance.u0 if instance is not None else ValueFn.zeros(mdp, Kind.STATE_VALUE)
    if warm == "zero":
        return ValueFn.zeros(mdp, Kind.STATE_VALUE)
    if warm in ("lower", "upper"):
        return warm_start(mdp, Kind.STATE_VALUE, warm)
    if warm.startswith("file:"):
        values = np.asarray(json.loads(Path(warm[5:]).read_text()), dtype=np.float64)
        return ValueFn(Kind.STATE_VALUE, values)
    raise AncviError(f"unknown --warm value {warm!r}")


def compute_references(mdp: Mdp, instance) -> tuple[ValueFn | None, ValueFn | None]:
    """Fixed points of the optimality and anti-optimality operators, where defined."""
    if mdp.gamma < 1.0:
        opt = fixed_point(Operator(mdp, Mode.OPTIMALITY, Kind.STATE_VALUE))
        anti = fixed_point(Operator(mdp, Mode.ANTI_OPTIMALITY, Kind.STATE_VALUE))
        return opt, anti
    if instance is not None:
        return hard_mod.chain_limit(instance), None
    return None, None


def run_solver(mdp, instance, variant, eps, k, start, seed, record=False):
    mode = Mode.GS_OPTIMALITY if variant is Variant.GS_ANC_VI else Mode.OPTIMALITY
    op = Operator(mdp, mode, Kind.STATE_VALUE)
    noise = NoiseSpec(eps, seed) if variant is Variant.APX_ANC_VI else None
    cfg = SolverConfig(variant, k, start, noise=noise, record_iterates=record)
    ref_opt, ref_anti = compute_references(mdp, instance)
    trace = run(op, cfg, ref_opt=ref_opt, ref_anti=ref_anti)
    inputs = None
    if ref_opt is not None:
        dist_opt = sup_norm(start.values - ref_opt.values)
        dist_anti = sup_norm(start.values - ref_anti.values) if ref_anti is not None else None
        eps_max = None
        if trace.eps_norms is not None:
            drawn = trace.eps_norms[1:]
            eps_max = float(np.max(drawn)) if drawn.size else 0.0
        inputs = BoundInputs(mdp.gamma, dist_opt, dist_anti, eps_max)
    return trace, inputs


def bound_table(trace, inputs) -> dict[str, np.ndarray]:
    """Per-k general/monotone/lower columns for the CSV, nan where inapplicable."""
    k_count = trace.iteration_count + 1
    cols = {name: np.full(k_count, np.nan) for name in ("general", "monotone", "lower")}
    if inputs is None:
        return cols
    selectors = rates.default_selectors(trace)
    report = verify_trace(trace, inputs, bounds=selectors)
    for check in report.checks:
        if check.selector in ("vi", "general", "apx-general"):
            cols["general"][check.k] = check.bound
        elif check.selector in ("monotone", "apx-monotone"):
            cols["monotone"][check.k] = check.bound
    for k in range(k_count):
        cols["lower"][k] = rates.lower_bound(trace.gamma, k, inputs.dist_opt)
    return cols


def write_trace_csv(path, trace, inputs, timing: bool) -> None:
    cols = bound_table(trace, inputs)
    lines = [CSV_HEADER]
    for k in range(trace.iteration_count + 1):
        cells = [
            str(k),
            fmt17(trace.beta[k]),
            fmt17(trace.bellman_err[k]),
            fmt17(trace.dist_to_opt[k]) if trace.dist_to_opt is not None else "",
            fmt17(trace.dist_to_anti[k]) if trace.dist_to_anti is not None else "",
            fmt17(cols["general"][k]),
            fmt17(cols["monotone"][k]),
            fmt17(cols["lower"][k]),
            str(int(trace.wall_ns[k])) if timing else "",
        ]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def summary_dict(mdp, trace, inputs, violations=None) -> dict:
    policy = extract_policy(mdp, trace)
    return {
        "gamma": mdp.gamma,
        "n_states": mdp.n_states,
        "dist_opt": None if inputs is None else inputs.dist_opt,
        "dist_anti": None if inputs is None else inputs.dist_anti,
        "violations": violations,
        "policy": [int(a) for a in policy.actions()],
    }


def write_json(path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def tightened_violations(report, factor: float) -> list:
    """Re-flag the upper-bound checks after scaling bounds by `factor`."""
    out = []
    for c in report.checks:
        if c.selector in rates.LOWER_SELECTORS:
            violated = c.violated
        else:
            b = factor * c.bound
            violated = (b - c.measured) < -(report.rel_tol * abs(b) + ABS_FLOOR)
        if violated:
            out.append(c)
    return out


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    mdp, instance, label = resolve_source(args)
    start = resolve_start(args, mdp, instance)
    for text in args.solver:
        variant, eps = parse_solver(text)
        trace, inputs = run_solver(mdp, instance, variant, eps, args.k, start, args.seed)
        tag = solver_tag(variant, eps)
        write_trace_csv(out / f"trace_{label}_{tag}.csv", trace, inputs, args.timing)
        write_json(out / f"summary_{label}_{tag}.json", summary_dict(mdp, trace, inputs))
    return 0


def _verify_one(mdp, instance, text, k, start, seed, factor):
    variant, eps = parse_solver(text)
    trace, inputs = run_solver(mdp, instance, variant, eps, k, start, seed)
    if inputs is None:
        raise AncviError("verification needs reference fixed points (gamma < 1 or a hard instance)")
    report = verify_trace(trace, inputs)
    bad = tightened_violations(report, factor)
    return trace, inputs, report, bad


def cmd_verify(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    factor = args.tighten
    runs = []
    total = 0

    sources = []
    if args.mdp or args.garnet or args.hard:
        mdp, instance, label = resolve_source(args)
        start = resolve_start(args, mdp, instance)
        sources.append((mdp, instance, label, start, args.k))
    else:
        # Default sweep: seeded garnet grid plus the undiscounted hard-chain
        # tightness case, whose bound is met with equality.
        for gamma in DEFAULT_SWEEP_GAMMAS:
            for seed in range(DEFAULT_SWEEP_GARNETS):
                mdp = make_garnet(seed=seed, gamma=gamma, **DEFAULT_SWEEP_SHAPE)
                label = f"garnet_s{seed}_g{gamma:g}"
                sources.append((mdp, None, label, ValueFn.zeros(mdp, Kind.STATE_VALUE), DEFAULT_SWEEP_K))
        instance = hard_mod.build_hard(DEFAULT_HARD_CHECK["n"], 1.0)
        sources.append((instance.mdp, instance, "hard_g1", instance.u0, DEFAULT_HARD_CHECK["k"]))

    for mdp, instance, label, start, k in sources:
        for text in args.solver:
            _, inputs, report, bad = _verify_one(mdp, instance, text, k, start, args.seed, factor)
            total += len(bad)
            entry = {
                "gamma": mdp.gamma,
                "n_states": mdp.n_states,
                "dist_opt": inputs.dist_opt,
                "dist_anti": inputs.dist_anti,
                "violations": [
                    {"k": c.k, "bound": c.selector, "margin": c.margin} for c in bad
                ],
                "label": label,
                "solver": text,
            }
            runs.append(entry)

    payload = {"violations": total, "runs": runs}
    write_json(out / "report.json", payload)
    print(f"checked {len(runs)} run(s): {total} violation(s)")
    return 1 if total else 0


def cmd_sweep_bounds(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    gammas = parse_grid(args.gammas, float) if args.gammas else [round(0.01 * i, 2) for i in range(1, 100)] + [1.0]
    ks = parse_grid(args.ks, int) if args.ks else list(range(0, 101))
    if not gammas or not ks:
        raise AncviError("gamma and k grids must be nonempty")
    lines = ["gamma,k,vi_upper,anc_general,anc_monotone,lower,opt_factor"]
    worst = 0.0
    for gamma in gammas:
        for k in ks:
            factor = rates.optimality_factor(gamma, k)
            worst = max(worst, factor)
            lines.append(
                ",".join(
                    [
                        fmt17(gamma),
                        str(k),
                        fmt17(rates.vi_upper(gamma, k, 1.0)),
                        fmt17(rates.anc_upper(gamma, k, 1.0, rates.GENERAL)),
                        fmt17(rates.anc_upper(gamma, k, 1.0, rates.MONOTONE)),
                        fmt17(rates.lower_bound(gamma, k, 1.0)),
                        fmt17(factor),
                    ]
                )
            )
    (out / "bounds.csv").write_text("\n".join(lines) + "\n")
    print(f"max optimality factor over grid: {worst:.6f}")
    if worst > 4.0 + 1e-9:
        print("optimality factor exceeded 4; bounds are inconsistent", file=sys.stderr)
        return 1
    return 0


def cmd_hard(args) -> int:
    if not args.hard:
        raise AncviError("hard subcommand needs --hard n,gamma[,shift-file]")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _, instance, label = resolve_source(args)
    save_mdp(instance.mdp, out / f"{label}.json")
    write_json(
        out / f"{label}_instance.json",
        {
            "n": instance.n,
            "gamma": instance.mdp.gamma,
            "u0": instance.u0.values.tolist(),
            "analytic_fixed_point": instance.analytic_fixed_point.values.tolist(),
        },
    )
    print(f"wrote {label}.json and {label}_instance.json to {out}")
    return 0


def cmd_validate(args) -> int:
    if not args.mdp:
        raise AncviError("validate needs --mdp FILE")
    mdp = load_mdp(args.mdp)
    print(f"valid MDP: {mdp.n_states} states, {mdp.n_actions} actions, gamma={mdp.gamma:g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ancvi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_source(p):
        p.add_argument("--mdp", help="MDP JSON file")
        p.add_argument("--garnet", metavar="n,a,b,seed", help="random MDP parameters")
        p.add_argument("--hard", metavar="n,gamma[,shift-file]", help="worst-case chain instance")
        p.add_argument("--gamma", type=float, default=0.9, help="discount for --garnet (default 0.9)")

    def add_run(p):
        p.add_argument("--solver", action="append", default=None, help="vi|anc|apx:EPS|gs-anc (repeatable)")
        p.add_argument("--k", type=int, default=100, help="iteration count (default 100)")
        p.add_argument("--warm", default=None, help="lower|upper|zero|file:PATH start vector")
        p.add_argument("--seed", type=int, default=0, help="noise seed for apx runs")
        p.add_argument("--out", default=".", help="output directory")

    p = sub.add_parser("solve", help="run solvers, write trace CSVs and summaries")
    add_source(p)
    add_run(p)
    p.add_argument("--timing", action="store_true", help="fill the wall_ns CSV column")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("verify", help="check residual bounds; exit 1 on violation")
    add_source(p)
    add_run(p)
    p.add_argument("--tighten", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("sweep-bounds", help="tabulate closed-form bounds on a grid")
    p.add_argument("--gammas", help="comma list or start:stop:step (default 0.01..0.99 plus 1)")
    p.add_argument("--ks", help="comma list or start:stop[:step] (default 0..100)")
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(fn=cmd_sweep_bounds)

    p = sub.add_parser("hard", help="construct a worst-case chain instance")
    p.add_argument("--hard", metavar="n,gamma[,shift-file]", required=True)
    p.add_argument("--out", default=".", help="output directory")
    p.set_defaults(fn=cmd_hard)

    p = sub.add_parser("validate", help="validate an MDP JSON file")
    p.add_argument("--mdp", required=True, help="MDP JSON file")
    p.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "solver") and args.solver is None:
        args.solver = ["anc"]
    try:
        return args.fn(args)
    except AncviError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
