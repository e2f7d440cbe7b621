"""Benchmark the compiled stepping kernel against the NumPy fallback.

Runs the same ensemble stepping workload through both kernel modules,
checks that the trajectories agree to floating-point noise, and reports
steps-per-second plus the speedup.  Usage:

    python benchmarks/bench_kernels.py [--steps 2000] [--sizes 256,2048,16384]
"""
import argparse
import time

import numpy as np

from kinetic_ergo import _kernels_py
from kinetic_ergo import rng

try:
    from kinetic_ergo import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def run_kernel(kernels, n, d, steps, dt, seed=0):
    gen = rng.substream(seed, 12000, n)
    X = np.ascontiguousarray(gen.standard_normal((n, d)))
    Y = np.ascontiguousarray(gen.standard_normal((n, d)))
    A = np.eye(d)
    sigma = np.sqrt(2.0) * np.eye(d)
    scale = np.sqrt(dt)
    elapsed = 0.0
    for step in range(steps):
        xi = rng.step_normals(seed, step, (n, d))
        noise = scale * xi @ sigma.T
        start = time.perf_counter()
        kernels.step_ensemble(X, Y, A, 1.0, kernels.PERT_TANH, 0.2, 1.0,
                              0.05, kernels.MEASURE_EMPIRICAL, None,
                              noise, dt, kernels.SCHEME_SPLITTING)
        elapsed += time.perf_counter() - start
    return elapsed, X, Y


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=2000)
    ap.add_argument("--sizes", default="256,2048,16384")
    ap.add_argument("--d", type=int, default=1)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]

    if _kernels_c is None:
        print("compiled extension not built; benchmarking the NumPy kernel only")

    header = f"{'n':>8} {'python s':>10} {'compiled s':>11} {'speedup':>8}  agree"
    print(header)
    print("-" * len(header))
    for n in sizes:
        t_py, Xp, Yp = run_kernel(_kernels_py, n, args.d, args.steps, 1e-2)
        if _kernels_c is not None:
            t_c, Xc, Yc = run_kernel(_kernels_c, n, args.d, args.steps, 1e-2)
            agree = (np.allclose(Xp, Xc, rtol=1e-10, atol=1e-12)
                     and np.allclose(Yp, Yc, rtol=1e-10, atol=1e-12))
            print(f"{n:>8} {t_py:>10.3f} {t_c:>11.3f} {t_py / t_c:>7.1f}x  {agree}")
        else:
            print(f"{n:>8} {t_py:>10.3f} {'-':>11} {'-':>8}")


if __name__ == "__main__":
    main()
