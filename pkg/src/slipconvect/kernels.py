"""Hot numerical kernels with two interchangeable implementations.

The batched tridiagonal (Thomas) solve dominates the per-step cost of the
implicit solves: one independent system per Fourier mode, every time step.
The default path is numba-jitted; setting the environment variable
``SLIPCONVECT_NO_NUMBA=1`` (or running without numba installed) selects a
pure-numpy fallback that vectorizes the sweeps across systems.  Both paths
produce identical results to rounding; ``benchmarks/bench_kernels.py``
compares their throughput.
"""

from __future__ import annotations

import os

import numpy as np

FORCE_NUMPY = os.environ.get("SLIPCONVECT_NO_NUMBA", "0") == "1"

if not FORCE_NUMPY:
    try:
        from numba import njit

        HAS_NUMBA = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        HAS_NUMBA = False
else:
    HAS_NUMBA = False


def thomas_batch_numpy(
    sub: np.ndarray, diag: np.ndarray, sup: np.ndarray, rhs: np.ndarray
) -> np.ndarray:
    """Solve ``nsys`` independent tridiagonal systems, vectorized across systems.

    All inputs are (nsys, n); ``sub[:, 0]`` and ``sup[:, -1]`` are ignored.
    The systems assembled in this package are diagonally dominant, so no
    pivoting is needed.
    """
    nsys, n = diag.shape
    cp = np.empty((nsys, n), dtype=diag.dtype)
    dp = np.empty((nsys, n), dtype=rhs.dtype)
    cp[:, 0] = sup[:, 0] / diag[:, 0]
    dp[:, 0] = rhs[:, 0] / diag[:, 0]
    for j in range(1, n):
        denom = diag[:, j] - sub[:, j] * cp[:, j - 1]
        cp[:, j] = sup[:, j] / denom
        dp[:, j] = (rhs[:, j] - sub[:, j] * dp[:, j - 1]) / denom
    x = np.empty_like(dp)
    x[:, n - 1] = dp[:, n - 1]
    for j in range(n - 2, -1, -1):
        x[:, j] = dp[:, j] - cp[:, j] * x[:, j + 1]
    return x


if HAS_NUMBA:

    @njit(cache=True)
    def _thomas_batch_jit(sub, diag, sup, rhs):
        nsys, n = diag.shape
        x = np.empty_like(rhs)
        cp = np.empty(n, dtype=diag.dtype)
        dp = np.empty(n, dtype=rhs.dtype)
        for s in range(nsys):
            cp[0] = sup[s, 0] / diag[s, 0]
            dp[0] = rhs[s, 0] / diag[s, 0]
            for j in range(1, n):
                denom = diag[s, j] - sub[s, j] * cp[j - 1]
                cp[j] = sup[s, j] / denom
                dp[j] = (rhs[s, j] - sub[s, j] * dp[j - 1]) / denom
            x[s, n - 1] = dp[n - 1]
            for j in range(n - 2, -1, -1):
                x[s, j] = dp[j] - cp[j] * x[s, j + 1]
        return x

    def thomas_batch_numba(sub, diag, sup, rhs):
        return _thomas_batch_jit(
            np.ascontiguousarray(sub),
            np.ascontiguousarray(diag),
            np.ascontiguousarray(sup),
            np.ascontiguousarray(rhs),
        )

else:
    thomas_batch_numba = None


def thomas_batch(sub, diag, sup, rhs):
    """Active-path batched tridiagonal solve (numba unless disabled)."""
    if HAS_NUMBA:
        return thomas_batch_numba(sub, diag, sup, rhs)
    return thomas_batch_numpy(sub, diag, sup, rhs)
