"""Shared generators for the test suite."""
import numpy as np

from ddpole.baselines import admissible_subspace
from ddpole.plant import LtiSystem, SimulationConfig, is_controllable, random_controllable, simulate
from ddpole.signals import extract_data_matrices
from ddpole.synthesis import PoleSpec


def noiseless_data(sys, T, seed, x0="random"):
    traj = simulate(sys, SimulationConfig(T=T, x0=x0, rng_seed=seed))
    return traj, extract_data_matrices(traj)


def random_system(n, seed):
    return random_controllable(n, seed=seed)


def single_input_system(n, rng):
    while True:
        A = rng.standard_normal((n, n))
        A *= rng.uniform(0.3, 0.95) / np.abs(np.linalg.eigvals(A)).max()
        sys = LtiSystem(A, rng.standard_normal((n, 1)))
        if is_controllable(sys):
            return sys


def conjugate_closed_poles(n, rng, radius=0.9, min_gap=1e-2, min_real=0):
    """Distinct poles in the disc of ``radius``; a random number of conjugate pairs."""
    while True:
        pairs = rng.integers(0, (n - min_real) // 2 + 1)
        reals = rng.uniform(-radius, radius, n - 2 * pairs)
        r = radius * np.sqrt(rng.uniform(0.05, 1.0, pairs))
        th = rng.uniform(0.1, np.pi - 0.1, pairs)
        z = r * np.exp(1j * th)
        poles = np.concatenate([reals.astype(complex), z, z.conj()])
        d = np.abs(poles[:, None] - poles[None, :]) + np.eye(n) * 10
        if d.min() > min_gap:
            return rng.permutation(poles)


def feasible_instance(n, rng, *, repeated=True):
    """A controllable system and an assignable ``(Lambda, X)``.

    Eigenvectors are random members of the admissible subspaces; when
    ``repeated`` and ``m > 1`` one real pole gets multiplicity 2.
    """
    sys = random_controllable(n, seed=rng)
    while True:
        repeat = repeated and sys.m > 1
        poles = list(conjugate_closed_poles(n, rng, min_real=2 if repeat else 0))
        if repeat:
            reals = [i for i, p in enumerate(poles) if p.imag == 0]
            if len(reals) >= 2:
                poles[reals[1]] = poles[reals[0]]
        poles = np.array(poles, dtype=complex)
        X = np.empty((n, n), dtype=complex)
        done = set()
        for i, p in enumerate(poles):
            if i in done:
                continue
            S = admissible_subspace(sys, p if p.imag else p.real)
            if p.imag == 0:
                X[:, i] = S @ rng.standard_normal(S.shape[1])
                done.add(i)
            else:
                j = next(k for k in range(n) if k not in done and k != i and abs(poles[k] - p.conj()) < 1e-12)
                v = S @ (rng.standard_normal(S.shape[1]) + 1j * rng.standard_normal(S.shape[1]))
                X[:, i], X[:, j] = v, v.conj()
                done.update((i, j))
        X /= np.linalg.norm(X, axis=0)
        if np.linalg.cond(X) < 1e6:
            return sys, PoleSpec(poles, X)
