"""Trajectories, Hankel matrices, persistency of excitation and data blocks."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import InvalidInputError
from .numerics import DEFAULT_TOL, Tolerance, numerical_rank, pseudoinverse


def _as_signal(signal, name="signal") -> np.ndarray:
    s = np.asarray(signal)
    if s.ndim == 1:
        s = s.reshape(-1, 1)
    if s.ndim != 2:
        raise InvalidInputError(f"{name} must be a sequence of vectors, got shape {s.shape}")
    if not np.issubdtype(s.dtype, np.complexfloating):
        s = s.astype(float)
    if not np.all(np.isfinite(s)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return s


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """An input/state record ``u(0..T-1), x(0..T-1)``.

    ``inputs`` is ``T x m`` and ``states`` is ``T x n``; row ``t`` holds the
    sample at time ``t``. Arrays are copied and made read-only.
    """

    inputs: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        u = _as_signal(self.inputs, "inputs")
        x = _as_signal(self.states, "states")
        if np.iscomplexobj(u) or np.iscomplexobj(x):
            raise InvalidInputError("trajectories are real-valued")
        if u.shape[0] != x.shape[0]:
            raise InvalidInputError(f"inputs have {u.shape[0]} samples but states have {x.shape[0]}")
        if u.shape[0] < 2:
            raise InvalidInputError("a trajectory needs T >= 2 samples")
        object.__setattr__(self, "inputs", _frozen(u))
        object.__setattr__(self, "states", _frozen(x))

    @property
    def T(self) -> int:
        return self.inputs.shape[0]

    @property
    def m(self) -> int:
        return self.inputs.shape[1]

    @property
    def n(self) -> int:
        return self.states.shape[1]


@dataclass(frozen=True, eq=False)
class DataMatrices:
    """Shifted data blocks: ``U0 = [u(0)..u(T-2)]``, ``X0 = [x(0)..x(T-2)]``,
    ``X1 = [x(1)..x(T-1)]`` (samples are columns)."""

    U0: np.ndarray
    X0: np.ndarray
    X1: np.ndarray

    def __post_init__(self):
        cols = {self.U0.shape[1], self.X0.shape[1], self.X1.shape[1]}
        if len(cols) != 1:
            raise InvalidInputError("U0, X0 and X1 must have the same number of columns")
        if self.X0.shape[0] != self.X1.shape[0]:
            raise InvalidInputError("X0 and X1 must have the same number of rows")

    @property
    def n(self) -> int:
        return self.X0.shape[0]

    @property
    def m(self) -> int:
        return self.U0.shape[0]

    @property
    def columns(self) -> int:
        return self.X0.shape[1]

    @property
    def stacked(self) -> np.ndarray:
        """``[X0; U0]``."""
        return np.vstack([self.X0, self.U0])


@dataclass(frozen=True)
class PEReport:
    """Outcome of a persistency-of-excitation test.

    ``bool(report)`` is the verdict; the remaining fields say why.
    """

    is_pe: bool
    rank: int
    required_rank: int
    columns: int
    order: int

    @property
    def enough_columns(self) -> bool:
        return self.columns >= self.required_rank

    def __bool__(self) -> bool:
        return self.is_pe

    def describe(self) -> str:
        verdict = "persistently exciting" if self.is_pe else "NOT persistently exciting"
        msg = (f"{verdict} of order {self.order}: rank {self.rank} / required {self.required_rank} "
               f"({self.columns} Hankel columns)")
        if not self.enough_columns:
            msg += f"; too short, need T - L + 1 >= {self.required_rank}"
        return msg


def hankel(signal, L: int) -> np.ndarray:
    """Block Hankel matrix with ``L`` block rows.

    ``signal`` is a length-``T`` sequence of ``sigma``-vectors (a 1-D array is a
    scalar signal). Block ``(i, j)`` of the ``L*sigma x (T-L+1)`` result is
    ``signal[i + j]``.

    >>> hankel([1, 2, 3, 4], 2)
    array([[1., 2., 3.],
           [2., 3., 4.]])
    """
    s = _as_signal(signal)
    T = s.shape[0]
    L = int(L)
    if not 1 <= L <= T:
        raise InvalidInputError(f"Hankel depth must satisfy 1 <= L <= T={T}, got L={L}")
    if np.iscomplexobj(s) or _kernels.hankel_numba is None:
        return _kernels.hankel_numpy(s, L)
    return _kernels.hankel_kernel(s, L)


def is_persistently_exciting(signal, L: int, tol: Tolerance = DEFAULT_TOL) -> PEReport:
    """Test whether ``hankel(signal, L)`` has full row rank ``sigma * L``."""
    s = _as_signal(signal)
    if s.shape[0] == 0:
        raise InvalidInputError("signal is empty")
    T, sigma = s.shape
    required = sigma * int(L)
    if L < 1 or L > T:
        return PEReport(False, 0, required, max(T - L + 1, 0), int(L))
    H = hankel(s, L)
    cols = H.shape[1]
    if cols < required:
        # full row rank is impossible with fewer columns than rows
        return PEReport(False, numerical_rank(H, tol), required, cols, int(L))
    r = numerical_rank(H, tol)
    return PEReport(r == required, r, required, cols, int(L))


def extract_data_matrices(traj: Trajectory) -> DataMatrices:
    """Split a trajectory into consecutive-sample blocks ``U0, X0, X1``."""
    if traj.T < 2:
        raise InvalidInputError("need T >= 2 to form data matrices")
    u = traj.inputs.T
    x = traj.states.T
    return DataMatrices(U0=u[:, :-1].copy(), X0=x[:, :-1].copy(), X1=x[:, 1:].copy())


def fundamental_lemma_check(dm: DataMatrices, d: int = 1, traj: Trajectory | None = None,
                            tol: Tolerance = DEFAULT_TOL) -> bool:
    """Rank condition of the fundamental lemma.

    For ``d == 1`` checks ``rank [X0; U0] == n + m``. For ``d > 1`` the full
    trajectory is needed and ``rank [H_1(x_[0,T-d]); H_d(u)] == n + d*m`` is
    checked.
    """
    if d < 1:
        raise InvalidInputError("d must be >= 1")
    n, m = dm.n, dm.m
    if d == 1:
        D = dm.stacked
        if D.shape[1] < n + m:
            return False
        return numerical_rank(D, tol) == n + m
    if traj is None:
        raise InvalidInputError("the d > 1 test needs the trajectory")
    T = traj.T
    if T - d + 1 < n + d * m:
        return False
    Hx = hankel(traj.states[:T - d + 1], 1)
    Hu = hankel(traj.inputs, d)
    return numerical_rank(np.vstack([Hx, Hu]), tol) == n + d * m


def data_consistency_residual(dm: DataMatrices, tol: Tolerance = DEFAULT_TOL) -> float:
    """Relative least-squares residual of ``X1 ~ [A B][X0; U0]``.

    Zero (to rounding) for noiseless data; a diagnostic only.
    """
    D = dm.stacked
    fit = dm.X1 @ pseudoinverse(D, tol) @ D
    scale = max(np.linalg.norm(dm.X1), np.finfo(float).tiny)
    return float(np.linalg.norm(dm.X1 - fit) / scale)


# -- file format ------------------------------------------------------------

def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def write_trajectory(traj: Trajectory, path) -> Path:
    """Write ``path`` (CSV ``t,u_1..u_m,x_1..x_n``) and its JSON sidecar."""
    path = Path(path)
    header = ["t"] + [f"u_{i + 1}" for i in range(traj.m)] + [f"x_{i + 1}" for i in range(traj.n)]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(traj.T):
            w.writerow([t] + [repr(float(v)) for v in traj.inputs[t]] + [repr(float(v)) for v in traj.states[t]])
    sidecar_path(path).write_text(json.dumps({"m": traj.m, "n": traj.n, "T": traj.T}, indent=2) + "\n")
    return path


def read_trajectory(path) -> Trajectory:
    """Read a trajectory CSV, validating it against the JSON sidecar."""
    path = Path(path)
    meta_path = sidecar_path(path)
    if not meta_path.exists():
        raise InvalidInputError(f"missing sidecar {meta_path}")
    try:
        meta = json.loads(meta_path.read_text())
        m, n, T = int(meta["m"]), int(meta["n"]), int(meta["T"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"bad sidecar {meta_path}: {exc}") from exc
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidInputError(f"{path} is empty")
    expected = ["t"] + [f"u_{i + 1}" for i in range(m)] + [f"x_{i + 1}" for i in range(n)]
    header = [h.strip() for h in rows[0]]
    if header != expected:
        raise InvalidInputError(f"header {header} does not match sidecar dimensions m={m}, n={n}")
    body = [r for r in rows[1:] if r]
    if len(body) != T:
        raise InvalidInputError(f"{path} has {len(body)} rows, sidecar says T={T}")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise InvalidInputError(f"non-numeric entry in {path}: {exc}") from exc
    if data.shape[1] != 1 + m + n:
        raise InvalidInputError(f"rows of {path} have {data.shape[1]} fields, expected {1 + m + n}")
    return Trajectory(inputs=data[:, 1:1 + m], states=data[:, 1 + m:])
