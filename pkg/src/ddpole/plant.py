"""Linear plants: representation, simulation, random generation, presets."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import GenerationError, InvalidInputError
from .numerics import DEFAULT_TOL, Tolerance, as_matrix, numerical_rank
from .signals import Trajectory

MAX_DRAWS = 1000


@dataclass(frozen=True, eq=False)
class LtiSystem:
    """Discrete-time pair ``x(t+1) = A x(t) + B u(t)`` with full-column-rank ``B``."""

    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = np.asarray(self.B, dtype=float)
        if B.ndim == 1:
            B = B.reshape(-1, 1)
        B = as_matrix(B, "B")
        if np.iscomplexobj(A) or np.iscomplexobj(B):
            raise InvalidInputError("A and B must be real")
        if A.shape[0] != A.shape[1]:
            raise InvalidInputError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise InvalidInputError(f"B has {B.shape[0]} rows, A is {A.shape[0]}x{A.shape[0]}")
        if numerical_rank(B) != B.shape[1]:
            raise InvalidInputError("B must have full column rank")
        A.setflags(write=False)
        B.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvals(self.A)).max())

    def to_json(self) -> dict:
        return {"A": self.A.tolist(), "B": self.B.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "LtiSystem":
        try:
            return cls(np.asarray(obj["A"], dtype=float), np.asarray(obj["B"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad system description: {exc}") from exc


def load_system(path) -> LtiSystem:
    return LtiSystem.from_json(json.loads(Path(path).read_text()))


def save_system(sys: LtiSystem, path) -> None:
    Path(path).write_text(json.dumps(sys.to_json(), indent=2) + "\n")


@dataclass(frozen=True)
class SimulationConfig:
    """How to generate a trajectory.

    ``inputs`` set to an explicit ``T x m`` array overrides the i.i.d. Gaussian
    input of variance ``input_variance``. ``x0=None`` starts from the origin;
    ``x0="random"`` draws ``x(0) ~ N(0, I)`` from the same RNG stream.
    """

    T: int
    x0: object = None
    input_variance: float = 1.0
    inputs: np.ndarray | None = None
    noise_variance: float = 0.0
    rng_seed: object = 0

    def __post_init__(self):
        if int(self.T) < 2:
            raise InvalidInputError("T must be >= 2")
        if self.noise_variance < 0 or self.input_variance < 0:
            raise InvalidInputError("variances must be non-negative")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def simulate(sys: LtiSystem, cfg: SimulationConfig) -> Trajectory:
    """Simulate ``x(t+1) = A x(t) + B u(t) + e(t)`` with ``e ~ N(0, noise_variance I)``.

    Draw order from the RNG is fixed (initial state, inputs, noise), so a seed
    determines the trajectory.
    """
    n, m, T = sys.n, sys.m, int(cfg.T)
    rng = _rng(cfg.rng_seed)
    if cfg.x0 is None:
        x0 = np.zeros(n)
    elif isinstance(cfg.x0, str):
        if cfg.x0 != "random":
            raise InvalidInputError(f"unknown x0 mode {cfg.x0!r}")
        x0 = rng.standard_normal(n)
    else:
        x0 = np.asarray(cfg.x0, dtype=float).reshape(-1)
        if x0.shape != (n,):
            raise InvalidInputError(f"x0 must have length {n}")
    if cfg.inputs is not None:
        U = np.asarray(cfg.inputs, dtype=float)
        if U.ndim == 1:
            U = U.reshape(-1, 1)
        if U.shape != (T, m):
            raise InvalidInputError(f"inputs must be {T}x{m}, got {U.shape}")
    else:
        U = np.sqrt(cfg.input_variance) * rng.standard_normal((T, m))
    if cfg.noise_variance > 0:
        E = np.sqrt(cfg.noise_variance) * rng.standard_normal((T, n))
    else:
        E = np.zeros((T, n))
    X = _kernels.simulate_kernel(sys.A, sys.B, x0, U, E)
    return Trajectory(inputs=U, states=X)


def controllability_matrix(sys: LtiSystem) -> np.ndarray:
    blocks = [sys.B]
    for _ in range(sys.n - 1):
        blocks.append(sys.A @ blocks[-1])
    return np.hstack(blocks)


def is_controllable(sys: LtiSystem, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Kalman rank test ``rank [B, AB, ..., A^(n-1) B] == n``."""
    return numerical_rank(controllability_matrix(sys), tol) == sys.n


def random_controllable(n: int, seed=None, *, radius_range=(0.3, 0.95),
                        tol: Tolerance = DEFAULT_TOL) -> LtiSystem:
    """Random stable controllable pair with ``m = max(1, n // 2)`` inputs.

    ``A`` is standard normal rescaled to a spectral radius drawn uniformly from
    ``radius_range``; ``B`` is standard normal. Draws are repeated until the
    pair is controllable, at most ``MAX_DRAWS`` times.
    """
    if n < 2:
        raise InvalidInputError("n must be >= 2")
    m = max(1, n // 2)
    rng = _rng(seed)
    lo, hi = radius_range
    for _ in range(MAX_DRAWS):
        A = rng.standard_normal((n, n))
        rho = np.abs(np.linalg.eigvals(A)).max()
        if rho == 0:
            continue
        A *= rng.uniform(lo, hi) / rho
        B = rng.standard_normal((n, m))
        if numerical_rank(B, tol) != m:
            continue
        sys = LtiSystem(A, B)
        if sys.spectral_radius() < 1 and is_controllable(sys, tol):
            return sys
    raise GenerationError(f"no controllable stable pair found in {MAX_DRAWS} draws")


def chemical_reactor() -> LtiSystem:
    """Discretised chemical reactor (unit sample time); two unstable modes."""
    A = np.array([
        [6.9771, 2.0379, 5.0672, -2.2212],
        [-0.6941, -0.0434, -0.4738, 0.3425],
        [0.2048, 0.9081, 0.3159, 0.6172],
        [-0.5082, 0.7106, -0.2000, 0.8531],
    ])
    B = np.array([
        [4.8874, 1.4777, 5.0448, 4.6020],
        [-6.5545, 0.5230, -1.1389, -0.1133],
    ]).T
    return LtiSystem(A, B)


def closed_loop(sys: LtiSystem, K) -> LtiSystem:
    """``(A - B K, B)`` for the law ``u = -K x + v``."""
    K = np.asarray(K)
    if K.ndim == 1 and sys.m == 1:
        K = K.reshape(1, -1)
    if K.shape != (sys.m, sys.n):
        raise InvalidInputError(f"K must be {sys.m}x{sys.n}, got {K.shape}")
    if np.iscomplexobj(K):
        if np.abs(K.imag).max() > 0:
            raise InvalidInputError("K must be real")
        K = K.real
    return LtiSystem(sys.A - sys.B @ K, sys.B)
