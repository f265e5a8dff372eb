#!/usr/bin/env python3
"""Benchmark the two gene-evaluation backends against each other.

Times the numba kernel and the pure-numpy fallback on the same random
population and data matrix, checks that they agree bit for bit, and prints
the per-backend throughput.  The package-wide default backend is whatever
``EMBGEP_BACKEND`` selects at import time; this script calls both
implementations directly, so it works under any setting.
"""

import argparse
import time

import numpy as np

from embgep import evolution, kernels


def bench(fn, programs, X, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for progs in programs:
            for prog in progs:
                fn(prog, X)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=85)
    parser.add_argument("--chromosomes", type=int, default=50)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    config = evolution.GepConfig(num_chromosomes=args.chromosomes, rng_seed=args.seed)
    population = evolution.initialize(config, rng)
    programs = [kernels.compile_chromosome(c) for c in population]
    X = rng.uniform(0.1, 4.0, size=(args.rows, config.num_inputs))

    n_evals = sum(len(p) for p in programs)
    print(f"{n_evals} gene programs x {args.rows} rows, best of {args.repeats} repeats")

    t_numpy = bench(kernels.evaluate_gene_numpy, programs, X, args.repeats)
    print(f"numpy : {t_numpy * 1e3:8.2f} ms  ({n_evals / t_numpy:,.0f} gene-evals/s)")

    if not kernels.NUMBA_AVAILABLE:
        print("numba : not available, skipped")
        return

    kernels.evaluate_gene_numba(programs[0][0], X)  # JIT warmup
    t_numba = bench(kernels.evaluate_gene_numba, programs, X, args.repeats)
    print(f"numba : {t_numba * 1e3:8.2f} ms  ({n_evals / t_numba:,.0f} gene-evals/s)")
    print(f"speedup: {t_numpy / t_numba:.1f}x")

    for progs in programs:
        for prog in progs:
            a = kernels.evaluate_gene_numpy(prog, X)
            b = kernels.evaluate_gene_numba(prog, X)
            if not np.array_equal(a, b, equal_nan=True):
                raise SystemExit("backends disagree!")
    print("backends agree bit-for-bit (NaN positions included)")


if __name__ == "__main__":
    main()
