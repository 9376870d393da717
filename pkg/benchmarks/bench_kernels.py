"""Time the numba and pure-numpy paths of the two hot kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]

The first numba call compiles (or loads the on-disk cache) and is excluded.
"""

import argparse
import time

import numpy as np

from submax import _kernels
from submax.mvn import _lattice, _plan


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def genz_case(K, n):
    r = 0.5
    rho = np.full((K, K), r) + (1 - r) * np.eye(K)
    lower = np.full(K, -np.inf)
    upper = np.full(K, 2.3)
    perm, chol, rows, ptr = _plan(lower, upper, rho)
    dim = len(ptr) - 2
    w = _lattice(n, dim, np.random.default_rng(0).random(dim))
    return chol, lower[perm], upper[perm], rows, ptr, w


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    cases = []
    for K, n in ((3, 1 << 14), (7, 1 << 14), (11, 1 << 16)):
        prob = genz_case(K, n)
        cases.append((f"genz integrand K={K} n={n}",
                      lambda p=prob, u=True: _kernels.genz_integrand(*p, use_numba=u),
                      lambda p=prob, u=False: _kernels.genz_integrand(*p, use_numba=u)))
    rng = np.random.default_rng(1)
    for r, n in ((500, 1008), (8000, 63)):
        d = rng.normal(0.5, 1, (r, n))
        cases.append((f"signed-rank sums {r}x{n}",
                      lambda d=d: _kernels.signed_rank_sums(d, use_numba=True),
                      lambda d=d: _kernels.signed_rank_sums(d, use_numba=False)))

    print(f"{'kernel':<34}{'numba (ms)':>12}{'numpy (ms)':>12}{'speedup':>10}")
    for name, fast, slow in cases:
        np.testing.assert_allclose(fast(), slow(), rtol=1e-10, atol=1e-12)  # also warms up
        tf, ts = best_of(fast, args.repeat), best_of(slow, args.repeat)
        print(f"{name:<34}{tf * 1e3:>12.2f}{ts * 1e3:>12.2f}{ts / tf:>9.1f}x")


if __name__ == "__main__":
    main()
