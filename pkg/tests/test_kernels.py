import os
import subprocess
import sys

import numpy as np
import pytest

from ddpole import _kernels

needs_numba = pytest.mark.skipif(not _kernels.NUMBA_ENABLED, reason="numba path disabled")


def _inputs(n, m, T, seed=0):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n)) * 0.5 / np.sqrt(n)
    return A, rng.standard_normal((n, m)), rng.standard_normal(n), rng.standard_normal((T, m)), rng.standard_normal((T, n))


@needs_numba
@pytest.mark.parametrize("n,m,T", [(1, 1, 2), (4, 2, 30), (10, 5, 300)])
def test_simulate_parity(n, m, T):
    args = _inputs(n, m, T)
    np.testing.assert_allclose(_kernels.simulate_numba(*args), _kernels.simulate_numpy(*args), rtol=1e-12, atol=1e-12)


@needs_numba
@pytest.mark.parametrize("sigma,T,L", [(1, 5, 1), (1, 9, 4), (3, 20, 7), (2, 6, 6)])
def test_hankel_parity(sigma, T, L):
    S = np.random.default_rng(1).standard_normal((T, sigma))
    np.testing.assert_array_equal(_kernels.hankel_numba(S, L), _kernels.hankel_numpy(S, L))


def test_numpy_kernels_directly():
    A, B, x0, U, E = _inputs(3, 1, 5)
    X = _kernels.simulate_numpy(A, B, x0, U, E)
    np.testing.assert_allclose(X[1], A @ x0 + B @ U[0] + E[0])
    H = _kernels.hankel_numpy(np.arange(4.0).reshape(-1, 1), 2)
    np.testing.assert_array_equal(H, [[0, 1, 2], [1, 2, 3]])


def test_env_flag_selects_fallback():
    env = dict(os.environ, DDPOLE_DISABLE_NUMBA="1")
    code = ("from ddpole import _kernels as k; "
            "print(k.NUMBA_ENABLED, k.simulate_kernel is k.simulate_numpy, k.simulate_numba)")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "True", "None"]
