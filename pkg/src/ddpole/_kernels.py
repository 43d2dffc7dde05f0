"""Inner loops for trajectory generation and Hankel assembly.

Each kernel exists twice: a numba ``@njit`` version and a plain numpy version.
The numba path is used when numba imports and ``DDPOLE_DISABLE_NUMBA`` is not
set to a truthy value. The two paths agree to rounding (summation order
differs), and each is deterministic on its own.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("DDPOLE_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("numba disabled by DDPOLE_DISABLE_NUMBA")
    import numba as nb
except ImportError:
    nb = None

NUMBA_ENABLED = nb is not None


def simulate_numpy(A, B, x0, U, E):
    """Run ``x[t+1] = A x[t] + B u[t] + e[t]``; rows of the result are states."""
    T = U.shape[0]
    X = np.empty((T, A.shape[0]))
    X[0] = x0
    for t in range(T - 1):
        X[t + 1] = A @ X[t] + B @ U[t] + E[t]
    return X


def hankel_numpy(S, L):
    """Block Hankel matrix of depth ``L`` from a ``T x sigma`` signal."""
    T, sigma = S.shape
    cols = T - L + 1
    H = np.empty((L * sigma, cols), dtype=S.dtype)
    for i in range(L):
        H[i * sigma:(i + 1) * sigma] = S[i:i + cols].T
    return H


if NUMBA_ENABLED:
    njit = nb.njit(cache=False, nogil=True)

    @njit
    def _simulate_nb(A, B, x0, U, E):
        T = U.shape[0]
        n = A.shape[0]
        m = B.shape[1]
        X = np.empty((T, n))
        X[0] = x0
        for t in range(T - 1):
            for i in range(n):
                acc = 0.0
                for j in range(n):
                    acc += A[i, j] * X[t, j]
                for j in range(m):
                    acc += B[i, j] * U[t, j]
                X[t + 1, i] = acc + E[t, i]
        return X

    @njit
    def _hankel_nb(S, L):
        T, sigma = S.shape
        cols = T - L + 1
        H = np.empty((L * sigma, cols))
        for i in range(L):
            for k in range(sigma):
                for j in range(cols):
                    H[i * sigma + k, j] = S[i + j, k]
        return H

    def simulate_numba(A, B, x0, U, E):
        return _simulate_nb(np.ascontiguousarray(A, dtype=np.float64),
                            np.ascontiguousarray(B, dtype=np.float64),
                            np.ascontiguousarray(x0, dtype=np.float64),
                            np.ascontiguousarray(U, dtype=np.float64),
                            np.ascontiguousarray(E, dtype=np.float64))

    def hankel_numba(S, L):
        return _hankel_nb(np.ascontiguousarray(S, dtype=np.float64), int(L))

    simulate_kernel = simulate_numba
    hankel_kernel = hankel_numba
else:
    simulate_numba = hankel_numba = None
    simulate_kernel = simulate_numpy
    hankel_kernel = hankel_numpy
