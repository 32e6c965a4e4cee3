"""Timing comparison of the compiled and pure-numpy integrand kernels.

Run as `python -m blockhyperg.benchmark`. Checks that both backends agree
before timing them; reports evaluations per second for the log-space
kernel at several batch sizes.
"""

from __future__ import annotations

import time

import numpy as np

from . import kernels
from .kernels import python_impl

BATCH_SIZES = (10_000, 100_000, 1_000_000)
K = 3
REPEATS = 5


def _problem(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    x = -rng.exponential(scale=2.0, size=(n, K))
    beta = 0.5 + rng.random(K)
    rho = rng.dirichlet(np.ones(K + 1))[:K]
    delta = 1.0 - rho.sum()
    m = 250.0
    return np.ascontiguousarray(x), beta, rho, float(delta), m


def _time(fn, args) -> float:
    best = np.inf
    for _ in range(REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run() -> None:
    print(f"active backend: {kernels.BACKEND}")
    x, beta, rho, delta, m = _problem(1000)
    ref = python_impl.log_integrand_logs(x, beta, rho, delta, m)
    got = kernels.log_integrand_logs(x, beta, rho, delta, m)
    worst = float(np.max(np.abs(np.asarray(got) - ref)))
    print(f"backend agreement (1000 points): max abs diff {worst:.2e}")
    if worst > 1e-12:
        raise AssertionError("kernel backends disagree")
    for n in BATCH_SIZES:
        args = _problem(n)
        t_py = _time(python_impl.log_integrand_logs, args)
        line = (f"n={n:>9,}  numpy {n / t_py / 1e6:7.1f} Me/s"
                f"  ({t_py * 1e3:8.2f} ms)")
        if kernels.BACKEND == "cython":
            t_cy = _time(kernels.log_integrand_logs, args)
            line += (f"  cython {n / t_cy / 1e6:7.1f} Me/s"
                     f"  ({t_cy * 1e3:8.2f} ms)"
                     f"  speedup x{t_py / t_cy:.2f}")
        print(line)


if __name__ == "__main__":
    run()
