"""Throughput comparison of the two batched tridiagonal solve paths.

Run with the default environment to benchmark numba against the pure-numpy
fallback in one process; the active production path is whichever
``slipconvect.kernels.thomas_batch`` dispatches to.

    python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from slipconvect.kernels import HAS_NUMBA, thomas_batch_numba, thomas_batch_numpy

# (nsys, n) shaped like the per-step implicit solves: nsys = n1 Fourier
# modes, n = n2 + 1 wall-to-wall points
SIZES = [(32, 33), (64, 65), (128, 129), (256, 257), (512, 513)]
REPEATS = 50


def make_systems(nsys: int, n: int, rng: np.random.Generator):
    sub = rng.standard_normal((nsys, n))
    sup = rng.standard_normal((nsys, n))
    # strict diagonal dominance, like the Helmholtz systems
    diag = 4.0 + np.abs(sub) + np.abs(sup) + rng.random((nsys, n))
    rhs = rng.standard_normal((nsys, n)) + 1j * rng.standard_normal((nsys, n))
    return sub, diag, sup, rhs


def bench(fn, args, repeats: int = REPEATS) -> float:
    fn(*args)  # warm-up (includes jit compilation on the numba path)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main() -> None:
    rng = np.random.default_rng(12345)
    print(f"numba available: {HAS_NUMBA}")
    header = f"{'nsys x n':>12} {'numpy [us]':>12}"
    if HAS_NUMBA:
        header += f" {'numba [us]':>12} {'speedup':>9} {'max|diff|':>11}"
    print(header)
    for nsys, n in SIZES:
        args = make_systems(nsys, n, rng)
        t_np = bench(thomas_batch_numpy, args)
        line = f"{f'{nsys} x {n}':>12} {t_np * 1e6:>12.1f}"
        if HAS_NUMBA:
            t_nb = bench(thomas_batch_numba, args)
            diff = np.max(
                np.abs(thomas_batch_numba(*args) - thomas_batch_numpy(*args))
            )
            line += f" {t_nb * 1e6:>12.1f} {t_np / t_nb:>8.2f}x {diff:>11.2e}"
        print(line)


if __name__ == "__main__":
    main()
