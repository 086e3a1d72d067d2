#!/usr/bin/env python3
"""Benchmark the compiled Haar kernels against the pure-numpy fallback.

Times the raw analysis/synthesis kernels and one representative BPDN solve
per backend (the kernels sit on the solver's per-iteration hot path when the
sparsity basis is the Haar one).

Run after an editable install::

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from codedfti import kernels
from codedfti import levels, sampling
from codedfti.dictionary import synth_dictionary
from codedfti.solver import BpdnProblem, solve_bpdn
from codedfti.transforms import dft_forward


def time_call(fn, *args, repeat=2000):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_kernels():
    print(f"selected backend: {kernels.BACKEND}")
    backends = [("numpy", kernels.numpy_backend)]
    if kernels.cython_backend is not None:
        backends.append(("cython", kernels.cython_backend))
    else:
        print("compiled kernels unavailable; numpy only")
    print(f"{'N':>6} {'op':>10} " + " ".join(f"{name:>12}" for name, _ in backends))
    for n in (256, 1024, 4096):
        x = np.random.default_rng(0).standard_normal(n)
        for label, idx in (("analysis", 0), ("synthesis", 1)):
            times = [time_call(be[idx], x) for _, be in backends]
            cells = " ".join(f"{t * 1e6:>10.2f}us" for t in times)
            print(f"{n:>6} {label:>10} {cells}")


def bench_solver():
    n = 1024
    dictionary = synth_dictionary(16, n, seed=0)
    x = dictionary.H @ np.random.default_rng(1).uniform(0, 1, 16)
    scheme = levels.build_dhw_sampling_levels(n)
    m = np.minimum(scheme.sizes, 52)  # ~40% budget, low levels saturated
    pattern = sampling.sample_mls(scheme, m, seed=2)
    problem = BpdnProblem(y=dft_forward(x)[pattern.omega], pattern=pattern, psi="dhw", tau=0.0)

    print(f"\nBPDN solve (N={n}, Haar sparsity, {pattern.M_xi} rows, 1500 iterations):")
    saved = kernels.haar_analysis, kernels.haar_synthesis
    pairs = [("numpy", kernels.numpy_backend)]
    if kernels.cython_backend is not None:
        pairs.append(("cython", kernels.cython_backend))
    try:
        for name, backend in pairs:
            kernels.haar_analysis, kernels.haar_synthesis = backend
            t0 = time.perf_counter()
            result = solve_bpdn(problem, max_iter=1500, check_every=10**9)
            dt = time.perf_counter() - t0
            print(f"  {name:>8}: {dt:.2f}s ({dt / result.iterations * 1e6:.0f}us/iter)")
    finally:
        kernels.haar_analysis, kernels.haar_synthesis = saved


if __name__ == "__main__":
    bench_kernels()
    bench_solver()
