"""Compiled vs pure-Python bandit loop: wall time per iteration for each method.

    python3 benchmarks/bench_kernels.py [--iterations N] [--K K] [--repeat R]
"""

import argparse
import time

import numpy as np

from pgrates import kernels
from pgrates.mdp_core import TabularMdp
from pgrates.optimizer import MethodSpec, RunConfig, run

METHODS = {
    "plain": MethodSpec("plain"),
    "entropy": MethodSpec("entropy", tau=0.2, eta=0.4),
    "two_stage": MethodSpec("two_stage", tau=0.2),
    "decaying": MethodSpec("decaying", alpha=1.0),
}


def best_time(config, backend, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        trace = run(config, backend=backend)
        times.append(time.perf_counter() - start)
    return min(times), trace


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--iterations", type=int, default=20_000)
    p.add_argument("--K", type=int, default=20)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    problem = TabularMdp.bandit(rng.uniform(size=args.K))
    theta = rng.standard_normal(args.K)
    print(f"K={args.K} T={args.iterations} default backend={kernels.BACKEND}")
    print(f"{'method':<10} {'python s':>10} {'cython s':>10} {'speedup':>9} {'max |diff|':>11}")
    for name, method in METHODS.items():
        cfg = RunConfig(problem, method, init=theta, iterations=args.iterations)
        t_py, tr_py = best_time(cfg, "python", args.repeat)
        if kernels.BACKEND != "cython":
            print(f"{name:<10} {t_py:>10.4f} {'n/a':>10}")
            continue
        t_cy, tr_cy = best_time(cfg, "cython", args.repeat)
        a, b = tr_py.table, tr_cy.table
        both = np.isfinite(a) & np.isfinite(b)
        diff = float(np.max(np.abs(a[both] - b[both])))
        print(f"{name:<10} {t_py:>10.4f} {t_cy:>10.4f} {t_py / t_cy:>8.0f}x {diff:>11.2e}")


if __name__ == "__main__":
    main()
