"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py --sizes 10 30 60 --candidates 200

Both paths are checked for identical output before timing. The first numba
call (compilation) is excluded.
"""

import argparse
import time

import numpy as np

from srtlab import kernels


def random_network(n, rng, density=0.3):
    W = rng.integers(0, 4, size=(n, n)) * (rng.random((n, n)) < density)
    A = np.triu(W, 1).astype(np.float64)
    A = A - A.T
    E = rng.uniform(0.5, 3.0, n)
    return A, E


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 30, 60])
    ap.add_argument("--candidates", type=int, default=200)
    ap.add_argument("--loans", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<16}{'n':>5}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}")
    for n in args.sizes:
        A, E = random_network(n, rng)
        rho = rng.uniform(0, 1e-3, n)
        lend = rng.integers(0, n, size=(args.candidates, args.loans))
        borr = (lend + rng.integers(1, n, size=lend.shape)) % n

        cases = {
            "failure_matrix": (lambda: kernels.failure_matrix_numba(A, E),
                               lambda: kernels.failure_matrix_numpy(A, E)),
            "esl_batch": (lambda: kernels.esl_batch_numba(A, E, rho, lend, borr),
                          lambda: kernels.esl_batch_numpy(A, E, rho, lend, borr)),
        }
        for name, (fast, slow) in cases.items():
            a, b = fast(), slow()
            if not np.array_equal(a, b) and not np.allclose(a, b, rtol=1e-12, atol=0):
                raise SystemExit(f"{name}: numba and numpy disagree at n={n}")
            t_nb = best_of(fast, args.repeat)
            t_np = best_of(slow, args.repeat)
            print(f"{name:<16}{n:>5}{t_nb * 1e3:>12.3f}{t_np * 1e3:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
