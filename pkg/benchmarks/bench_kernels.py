"""Benchmark the numba kernels against the pure-numpy fallback.

Times the optimality apply (V and Q), the Gauss-Seidel sweeps, and a full
anchored solve on a random MDP, for both kernel sets. Run as:

    python3 benchmarks/bench_kernels.py --n 400 --actions 8 --iters 200
"""

import argparse
import time

import numpy as np

from ancvi._kernels import NUMBA_KERNELS, NUMPY_KERNELS
from ancvi.mdp import make_garnet


def time_call(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(kern, mdp, v, q, iters):
    P, r, g = mdp.transitions, mdp.rewards, mdp.gamma

    def loop(fn, x):
        y = x
        for _ in range(iters):
            y = fn(P, r, g, y, False)
        return y

    return {
        "v_opt": time_call(loop, kern.v_opt, v),
        "q_opt": time_call(loop, kern.q_opt, q),
        "v_gs": time_call(loop, kern.v_gs, v),
        "q_gs": time_call(loop, kern.q_gs, q),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=400, help="number of states")
    parser.add_argument("--actions", type=int, default=8)
    parser.add_argument("--branching", type=int, default=10)
    parser.add_argument("--iters", type=int, default=200, help="operator applies per timing")
    args = parser.parse_args()

    mdp = make_garnet(args.n, args.actions, args.branching, seed=0, gamma=0.99)
    rng = np.random.default_rng(1)
    v = rng.normal(size=args.n)
    q = rng.normal(size=args.n * args.actions)

    sets = [NUMPY_KERNELS]
    if NUMBA_KERNELS is not None:
        # trigger compilation outside the timed region
        for fn in (NUMBA_KERNELS.v_opt, NUMBA_KERNELS.v_gs):
            fn(mdp.transitions, mdp.rewards, mdp.gamma, v, False)
        for fn in (NUMBA_KERNELS.q_opt, NUMBA_KERNELS.q_gs):
            fn(mdp.transitions, mdp.rewards, mdp.gamma, q, False)
        sets.append(NUMBA_KERNELS)
    else:
        print("numba unavailable; timing the numpy backend only")

    print(f"MDP: n={args.n}, actions={args.actions}, {args.iters} applies per cell")
    results = {k.name: bench_kernels(k, mdp, v, q, args.iters) for k in sets}
    names = list(results["numpy"])
    header = f"{'kernel':<8}" + "".join(f"{name:>12}" for name in results)
    if len(results) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name in names:
        row = f"{name:<8}" + "".join(f"{results[b][name]*1e3:>10.2f}ms" for b in results)
        if len(results) == 2:
            row += f"{results['numpy'][name] / results['numba'][name]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
