"""Compare the numba and numpy kernels, plus one end-to-end placement for scale.

Usage::

    python benchmarks/bench_kernels.py [--repeat 20]

Run with ``DDPOLE_DISABLE_NUMBA=1`` to confirm the fallback path is selected.
"""
import argparse
import time

import numpy as np

from ddpole import _kernels
from ddpole.plant import random_controllable
from ddpole.signals import Trajectory, extract_data_matrices
from ddpole.synthesis import PoleSpec, place_poles


def best_of(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"numba enabled: {_kernels.NUMBA_ENABLED}")
    print(f"{'kernel':<10}{'n':>4}{'T':>7}{'numpy [ms]':>13}{'numba [ms]':>13}{'speedup':>9}")
    for n, T in [(4, 40), (10, 200), (10, 2000), (50, 5000)]:
        m = max(1, n // 2)
        A = rng.standard_normal((n, n)) * 0.9 / np.sqrt(n)
        B = rng.standard_normal((n, m))
        x0 = rng.standard_normal(n)
        U = rng.standard_normal((T, m))
        E = rng.standard_normal((T, n))
        L = max(2, n // 2)
        cases = [
            ("simulate", lambda: _kernels.simulate_numpy(A, B, x0, U, E),
             _kernels.simulate_numba and (lambda: _kernels.simulate_numba(A, B, x0, U, E))),
            ("hankel", lambda: _kernels.hankel_numpy(U, L),
             _kernels.hankel_numba and (lambda: _kernels.hankel_numba(U, L))),
        ]
        for name, f_np, f_nb in cases:
            t_np = best_of(f_np, args.repeat)
            if f_nb:
                f_nb()
                t_nb = best_of(f_nb, args.repeat)
                print(f"{name:<10}{n:>4}{T:>7}{t_np * 1e3:>13.3f}{t_nb * 1e3:>13.3f}{t_np / t_nb:>9.1f}")
            else:
                print(f"{name:<10}{n:>4}{T:>7}{t_np * 1e3:>13.3f}{'-':>13}{'-':>9}")

    print("\nend-to-end place_poles (dominated by SVDs):")
    for n in (4, 10, 20):
        sys = random_controllable(n, seed=1)
        T = 10 * n
        U = rng.standard_normal((T, sys.m))
        X = _kernels.simulate_kernel(sys.A, sys.B, rng.standard_normal(n), U, np.zeros((T, n)))
        dm = extract_data_matrices(Trajectory(U, X))
        spec = PoleSpec(np.linspace(-0.5, 0.5, n))
        t = best_of(lambda: place_poles(dm, spec), max(3, args.repeat // 4))
        print(f"  n={n:<3} T={T:<4} {t * 1e3:8.2f} ms")


if __name__ == "__main__":
    main()
