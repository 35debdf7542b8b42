"""Compare the compiled and numpy moment kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--n 20000] [--p 20] [--repeat 5]

Times each kernel on both backends, then one full ``estimate_graph`` run per
backend on the same simulated dataset.
"""
import argparse
import timeit

import numpy as np

from hdlingam import kernels
from hdlingam.evaluation import ExperimentConfig, make_sem
from hdlingam.moments import MomentCache
from hdlingam.search import estimate_graph
from hdlingam.sem import simulate


def kernel_cases(X, K):
    p = X.shape[0]
    us = list(range(1, p))
    beta = np.linspace(-0.5, 0.5, 3)
    r = X[0].copy()
    return {
        "gram": lambda k: k.gram(X),
        "moment": lambda k: k.moment(X, [0, 1], [K - 1, 1]),
        "residual": lambda k: k.residual(X, 0, [1, 2, 3], beta),
        "residual_moments": lambda k: k.residual_moments(r, K),
        "cross_moment": lambda k: k.cross_moment(r, X[1], K - 1, 1),
        "cross_moments": lambda k: k.cross_moments(r, X, us, K),
    }


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20_000, help="rows")
    ap.add_argument("--p", type=int, default=20, help="columns")
    ap.add_argument("--K", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = kernels.available()
    if "cython" not in backends:
        print("compiled kernels unavailable; timing the numpy backend only")
    mods = {name: kernels.load(name) for name in backends}

    X = np.random.default_rng(args.seed).standard_t(6, size=(args.p, args.n))
    X = np.ascontiguousarray(X - X.mean(axis=1, keepdims=True))
    print(f"kernels on a {args.p} x {args.n} centred matrix (best of {args.repeat}, microseconds per call)")
    print(f"{'kernel':<18}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name, case in kernel_cases(X, args.K).items():
        times = [best_of(lambda m=mods[b]: case(m), args.repeat) for b in backends]
        row = f"{name:<18}" + "".join(f"{t * 1e6:12.1f}" for t in times)
        if len(times) > 1:
            row += f"{times[1] / times[0]:11.2f}x"
        print(row)

    p_search, n_search = 10, 500
    sem = make_sem(ExperimentConfig(p_values=(p_search,)), p_search, 0)
    data = simulate(sem, n_search, seed=args.seed)
    print(f"\nfull search, p={p_search}, n={n_search}, J=3 (seconds)")
    results = {}
    for b in backends:
        def run(b=b):
            results[b] = estimate_graph(MomentCache(data, kernels=mods[b]), J=3)
        print(f"{b:<18}{best_of(run, max(1, args.repeat // 2)):12.3f}")
    if len(results) > 1:
        # summation order differs between backends, so compare structure, not raw floats
        same = len({(r.ordering, frozenset(r.edges)) for r in results.values()}) == 1
        print(f"same ordering and edges across backends: {same}")


if __name__ == "__main__":
    main()
