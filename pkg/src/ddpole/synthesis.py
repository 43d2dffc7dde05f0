"""Pole placement and eigenstructure assignment computed from data only.

Both routines look for a matrix ``M`` whose columns satisfy
``(X1 - lambda_i X0) m_i = 0`` and return ``K = -U0 M (X0 M)^+``. For such
``M`` the closed loop ``A - B K`` has eigenvector ``X0 m_i`` with eigenvalue
``lambda_i``, because ``X1 = A X0 + B U0`` on noiseless data.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from . import _selection
from .errors import (
    DataRankError,
    InfeasibleError,
    InvalidInputError,
    MultiplicityError,
    NullspaceEmptyError,
    RankSelectionError,
    UnsupportedError,
)
from .numerics import (
    DEFAULT_TOL,
    Tolerance,
    as_matrix,
    eigendecomposition,
    nullspace_basis,
    numerical_rank,
    pseudoinverse,
    range_basis,
    sort_eigenvalues,
)
from .plant import LtiSystem
from .signals import DataMatrices, data_consistency_residual, fundamental_lemma_check

_SAME = 1e-9   # relative distance under which two requested poles are equal
_REAL = 1e-12  # relative imaginary part under which a pole is real


def _close(a, b) -> bool:
    return abs(a - b) <= _SAME * max(1.0, abs(a), abs(b))


@dataclass(frozen=True, eq=False)
class PoleSpec:
    """Desired closed-loop eigenvalues and, optionally, eigenvectors.

    ``poles`` must be closed under conjugation. If ``X`` is given, column ``i``
    is the eigenvector for ``poles[i]``; it must be nonsingular, real for real
    poles and conjugate for conjugate poles.
    """

    poles: np.ndarray
    X: np.ndarray | None = None

    def __post_init__(self):
        p = np.atleast_1d(np.asarray(self.poles, dtype=complex)).copy()
        if p.ndim != 1 or p.size == 0:
            raise InvalidInputError("poles must be a non-empty 1-D list")
        if not np.all(np.isfinite(p)):
            raise InvalidInputError("poles must be finite")
        small = np.abs(p.imag) <= _REAL * np.maximum(1.0, np.abs(p))
        p[small] = p[small].real
        p.setflags(write=False)
        object.__setattr__(self, "poles", p)
        pairs = self._pair_indices()
        object.__setattr__(self, "_pairs", pairs)
        if self.X is not None:
            X = as_matrix(self.X, "X").astype(complex)
            n = p.size
            if X.shape != (n, n):
                raise InvalidInputError(f"X must be {n}x{n}, got {X.shape}")
            if numerical_rank(X) < n:
                raise InvalidInputError("X must be nonsingular")
            scale = np.linalg.norm(X, axis=0)
            for kind, i, j in pairs:
                if kind == "real":
                    if np.linalg.norm(X[:, i].imag) > 1e-10 * scale[i]:
                        raise InvalidInputError(f"eigenvector {i} of real pole {p[i]} must be real")
                    X[:, i] = X[:, i].real
                elif np.linalg.norm(X[:, j] - X[:, i].conj()) > 1e-10 * scale[i]:
                    raise InvalidInputError(f"eigenvectors {i} and {j} of conjugate poles must be conjugate")
            X.setflags(write=False)
            object.__setattr__(self, "X", X)

    @property
    def n(self) -> int:
        return self.poles.size

    def _pair_indices(self):
        """``("real", i, i)`` or ``("pair", i, j)`` entries with ``Im poles[i] > 0``."""
        p = self.poles
        unused = set(range(p.size))
        out = []
        for i in range(p.size):
            if i not in unused:
                continue
            unused.discard(i)
            if p[i].imag == 0:
                out.append(("real", i, i))
                continue
            matches = [j for j in sorted(unused) if _close(p[j], np.conj(p[i]))]
            if not matches:
                raise InvalidInputError(f"pole {p[i]} has no conjugate partner")
            j = matches[0]
            if self.X is not None and len(matches) > 1:
                X = np.asarray(self.X, dtype=complex)
                j = min(matches, key=lambda k: np.linalg.norm(X[:, k] - X[:, i].conj()))
            unused.discard(j)
            out.append(("pair", i, j) if p[i].imag > 0 else ("pair", j, i))
        return out

    def pairs(self):
        return list(self._pairs)

    def multiplicities(self):
        """List of ``(pole, multiplicity)`` for the distinct requested poles."""
        out = []
        for lam in self.poles:
            for k, (mu, cnt) in enumerate(out):
                if _close(mu, lam):
                    out[k] = (mu, cnt + 1)
                    break
            else:
                out.append((lam, 1))
        return out

    def check_multiplicities(self, m: int):
        for lam, cnt in self.multiplicities():
            if cnt > m:
                raise MultiplicityError(
                    f"pole {lam} has multiplicity {cnt} > m={m}; the closed loop would be defective")

    def realified_X(self) -> np.ndarray:
        """Real matrix with ``Re x_i`` at column ``i`` and ``Im x_i`` at its partner column."""
        if self.X is None:
            raise InvalidInputError("no eigenvectors in this PoleSpec")
        Xr = np.empty((self.n, self.n))
        for kind, i, j in self._pairs:
            Xr[:, i] = self.X[:, i].real
            if kind == "pair":
                Xr[:, j] = self.X[:, i].imag
        return Xr

    def to_json(self) -> dict:
        obj = {"poles": [{"re": float(z.real), "im": float(z.imag)} for z in self.poles]}
        if self.X is not None:
            obj["X"] = [[{"re": float(z.real), "im": float(z.imag)} for z in row] for row in self.X]
        return obj

    @classmethod
    def from_json(cls, obj: dict, X=None) -> "PoleSpec":
        try:
            poles = [_parse_complex(z) for z in obj["poles"]]
            if X is None and obj.get("X") is not None:
                X = parse_complex_matrix(obj["X"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"bad pole specification: {exc}") from exc
        return cls(np.array(poles, dtype=complex), X)


def _parse_complex(z) -> complex:
    if isinstance(z, dict):
        return complex(float(z.get("re", 0.0)), float(z.get("im", 0.0)))
    if isinstance(z, (list, tuple)) and len(z) == 2:
        return complex(float(z[0]), float(z[1]))
    return complex(float(z))


def parse_complex_matrix(rows) -> np.ndarray:
    return np.array([[_parse_complex(z) for z in row] for row in rows], dtype=complex)


def load_pole_spec(path, eigvecs_path=None) -> PoleSpec:
    obj = json.loads(Path(path).read_text())
    X = None
    if eigvecs_path is not None:
        ev = json.loads(Path(eigvecs_path).read_text())
        X = parse_complex_matrix(ev["X"] if isinstance(ev, dict) else ev)
    return PoleSpec.from_json(obj, X)


# -- diagnostics --------------------------------------------------------------

def pole_matching_error(desired, achieved):
    """Permutation-invariant pole errors.

    Returns ``(max_err, mean_err)``: ``max_err`` is the bottleneck assignment
    (smallest achievable maximum distance over all pairings), ``mean_err`` the
    minimum-sum assignment divided by ``n``.
    """
    d = np.asarray(desired, dtype=complex).ravel()
    a = np.asarray(achieved, dtype=complex).ravel()
    if d.size != a.size:
        raise InvalidInputError("desired and achieved spectra differ in size")
    if d.size == 0:
        return 0.0, 0.0
    C = np.abs(d[:, None] - a[None, :])
    if not np.all(np.isfinite(C)):
        return float("inf"), float("inf")
    r, c = linear_sum_assignment(C)
    mean_err = float(C[r, c].sum() / d.size)
    levels = np.unique(C)
    lo, hi = 0, levels.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        graph = csr_matrix((C <= levels[mid]).astype(np.int8))
        if np.all(maximum_bipartite_matching(graph, perm_type="column") >= 0):
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo]), mean_err


@dataclass(frozen=True)
class Diagnostics:
    spectrum: np.ndarray
    eigvec_condition: float
    per_pole_condition: np.ndarray


def _spectral_diagnostics(Acl: np.ndarray, tol: Tolerance, strict: bool) -> Diagnostics:
    n = Acl.shape[0]
    try:
        w, V = eigendecomposition(Acl, tol)
    except Exception:
        if strict:
            raise
        w = np.linalg.eigvals(Acl)
        w = w[sort_eigenvalues(w)].astype(complex)
        return Diagnostics(w, float("inf"), np.full(n, np.inf))
    s = np.linalg.svd(V, compute_uv=False)
    if s[-1] <= tol.rel_rank_tol * s[0]:
        if strict:
            raise UnsupportedError("closed loop is numerically defective; condition numbers undefined")
        return Diagnostics(w, float("inf"), np.full(n, np.inf))
    Y = np.linalg.inv(V)
    per_pole = np.maximum(1.0, np.linalg.norm(Y, axis=1) * np.linalg.norm(V, axis=0))
    return Diagnostics(w, float(s[0] / s[-1]), per_pole)


def diagnostics(K, source, tol: Tolerance = DEFAULT_TOL) -> Diagnostics:
    """Conditioning of the closed loop under ``u = -K x``.

    ``source`` is an :class:`LtiSystem` (exact closed loop) or
    :class:`DataMatrices` (closed loop ``X1 [X0; U0]^+ [I; -K]`` implied by
    the data). Per-pole numbers are ``||y_i|| ||x_i|| / |y_i^H x_i|`` from the
    eigenvector matrix, which is Wilkinson's condition number for simple
    eigenvalues. Raises :class:`UnsupportedError` on a defective closed loop.
    """
    K = np.asarray(K, dtype=float)
    if isinstance(source, LtiSystem):
        Acl = source.A - source.B @ K
    elif isinstance(source, DataMatrices):
        n = source.n
        Acl = source.X1 @ pseudoinverse(source.stacked, tol) @ np.vstack([np.eye(n), -K])
    else:
        raise InvalidInputError("source must be an LtiSystem or DataMatrices")
    return _spectral_diagnostics(Acl, tol, strict=True)


@dataclass(frozen=True, eq=False)
class GainResult:
    """Feedback gain for ``u = -K x`` plus everything needed to audit it.

    ``achieved_spectrum`` and the condition numbers refer to the closed loop
    reconstructed from data, ``X1 M (X0 M)^+``, which equals ``A - B K`` on
    noiseless data.
    """

    K: np.ndarray
    M: np.ndarray
    desired: np.ndarray
    achieved_spectrum: np.ndarray
    placement_error: float
    mean_error: float
    eigvec_condition: float
    per_pole_condition: np.ndarray
    rank_X0M: int
    imag_residual: float
    data_residual: float
    eigenstructure_residual: float | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        def cx(v):
            return [{"re": float(z.real), "im": float(z.imag)} for z in np.asarray(v, dtype=complex)]

        def num(x):
            return float(x) if np.isfinite(x) else None

        return {
            "K": self.K.tolist(),
            "desired_poles": cx(self.desired),
            "achieved_spectrum": cx(self.achieved_spectrum),
            "placement_error": num(self.placement_error),
            "mean_error": num(self.mean_error),
            "diagnostics": {
                "eigvec_condition": num(self.eigvec_condition),
                "per_pole_condition": [num(c) for c in self.per_pole_condition],
                "rank_X0M": int(self.rank_X0M),
                "imag_residual": float(self.imag_residual),
                "data_residual": float(self.data_residual),
                "eigenstructure_residual": (None if self.eigenstructure_residual is None
                                            else float(self.eigenstructure_residual)),
                **self.extra,
            },
            "M_shape": list(self.M.shape),
        }


# -- synthesis ------------------------------------------------------------------

def _require_data(dm: DataMatrices, spec: PoleSpec, tol: Tolerance, check_data: bool):
    if spec.n != dm.n:
        raise InvalidInputError(f"{spec.n} poles requested for an n={dm.n} state")
    spec.check_multiplicities(dm.m)
    if check_data and not fundamental_lemma_check(dm, 1, tol=tol):
        rank = numerical_rank(dm.stacked, tol) if dm.columns else 0
        raise DataRankError(
            f"rank [X0; U0] = {rank} < n + m = {dm.n + dm.m}; the input is not exciting enough "
            f"({dm.columns} samples)")


def _finish(dm: DataMatrices, spec: PoleSpec, M: np.ndarray, M_complex: np.ndarray,
            tol: Tolerance, eig_res=None, extra=None, strict: bool = True) -> GainResult:
    V = dm.X0 @ M
    r = numerical_rank(V, tol)
    if strict and r < dm.n:
        raise RankSelectionError(f"rank(X0 M) = {r} < n = {dm.n}", {"rank_X0M": r})
    Vp = pseudoinverse(V, tol)
    K = -dm.U0 @ M @ Vp
    Kc = -dm.U0 @ M_complex @ pseudoinverse(dm.X0 @ M_complex, tol)
    imag_res = float(np.abs(Kc.imag).max(initial=0.0))
    Acl = dm.X1 @ M @ Vp
    diag = _spectral_diagnostics(Acl, tol, strict=False)
    err, mean_err = pole_matching_error(spec.poles, diag.spectrum)
    if spec.X is not None and eig_res is None:
        X = spec.X
        eig_res = float(np.linalg.norm(Acl @ X - X * spec.poles) / np.linalg.norm(X))
    return GainResult(
        K=K, M=M, desired=spec.poles.copy(), achieved_spectrum=diag.spectrum,
        placement_error=err, mean_error=mean_err, eigvec_condition=diag.eigvec_condition,
        per_pole_condition=diag.per_pole_condition, rank_X0M=r, imag_residual=imag_res,
        data_residual=data_consistency_residual(dm, tol), eigenstructure_residual=eig_res,
        extra=dict(extra or {}),
    )


def place_poles(dm: DataMatrices, spec: PoleSpec, tol: Tolerance = DEFAULT_TOL, *,
                seed=0, sweeps: int = 10, check_data: bool = True) -> GainResult:
    """Data-driven pole placement ``K = -U0 M (X0 M)^+``.

    For every distinct pole the admissible columns of ``M`` are the nullspace
    of ``X1 - lambda X0``. Directions inside each nullspace are picked by
    randomized greedy draws (rank of ``X0 M`` must grow) followed by
    conditioning sweeps (see :mod:`ddpole._selection`); a conjugate pair
    contributes ``Re m, Im m`` so that ``M`` and ``K`` are real.

    Args:
        dm: data blocks from one trajectory.
        spec: ``n`` poles closed under conjugation, no eigenvectors.
        seed: seed for the random draws; results are deterministic per seed.
        sweeps: conditioning sweeps; 0 keeps the plain random selection.
        check_data: enforce ``rank [X0; U0] = n + m`` before solving. When
            false, rank shortfalls during selection are tolerated too and a
            best-effort gain is returned; inspect ``rank_X0M``.

    Raises:
        DataRankError: the data is not rich enough (when ``check_data``).
        NullspaceEmptyError: ``X1 - lambda X0`` has full column rank.
        RankSelectionError: no selection reached ``rank(X0 M) = n``.
        MultiplicityError: a pole is repeated more than ``m`` times.
    """
    if spec.X is not None:
        raise InvalidInputError("spec carries eigenvectors; use assign_eigenstructure")
    _require_data(dm, spec, tol, check_data)
    rng = np.random.default_rng(seed)
    D = dm.stacked
    d_norm = np.linalg.norm(D, 2) if D.size else 0.0

    slots, nulls, order = [], [], []
    for kind, i, j in spec.pairs():
        lam = spec.poles[i]
        if kind == "real":
            lam = lam.real
        N = nullspace_basis(dm.X1 - lam * dm.X0, tol)
        if N.shape[1] == 0:
            raise NullspaceEmptyError(
                f"X1 - ({lam})X0 has a trivial nullspace; the data is inconsistent with a "
                "controllable linear system or too short")
        slots.append(_selection.Slot(dm.X0 @ N, kind == "pair"))
        nulls.append(N)
        order.append((i, j) if kind == "pair" else (i,))

    def accept(k, c):
        m_vec = nulls[k] @ c
        return np.linalg.norm(D @ m_vec) > tol.rel_rank_tol * d_norm * np.linalg.norm(m_vec)

    coeffs = _selection.select(slots, rng, tol, sweeps=sweeps, accept=accept, strict=check_data)

    n = dm.n
    M = np.empty((dm.columns, n))
    Mc = np.empty((dm.columns, n), dtype=complex)
    pole_order = np.empty(n, dtype=complex)
    col = 0
    for N, c, slot, idx in zip(nulls, coeffs, slots, order):
        m_vec = N @ c
        if slot.is_complex:
            M[:, col], M[:, col + 1] = m_vec.real, m_vec.imag
            Mc[:, col], Mc[:, col + 1] = m_vec, m_vec.conj()
            pole_order[col], pole_order[col + 1] = spec.poles[idx[0]], spec.poles[idx[1]]
            col += 2
        else:
            M[:, col] = Mc[:, col] = m_vec.real
            pole_order[col] = spec.poles[idx[0]]
            col += 1
    if check_data and numerical_rank(M, tol) < n:
        raise RankSelectionError("selected M is rank deficient")
    return _finish(dm, spec, M, Mc, tol, strict=check_data, extra={"column_poles": [
        {"re": float(z.real), "im": float(z.imag)} for z in pole_order]})


def assign_eigenstructure(dm: DataMatrices, spec: PoleSpec, tol: Tolerance = DEFAULT_TOL, *,
                          check_data: bool = True) -> GainResult:
    """Data-driven eigenstructure assignment.

    Each column solves ``[(X1 - lambda_i X0); X0] m_i = [0; x_i]`` in least
    squares and is accepted only if the residual is below
    ``residual_tol * (||x_i|| + ||stack|| ||m_i||)``. ``M`` is stored realified
    so that ``X0 M`` equals :meth:`PoleSpec.realified_X`.

    Raises:
        InfeasibleError: some ``x_i`` is not attainable by static feedback.
    """
    if spec.X is None:
        raise InvalidInputError("eigenstructure assignment needs eigenvectors X")
    _require_data(dm, spec, tol, check_data)
    n, cols = dm.n, dm.columns
    M = np.empty((cols, n))
    Mc = np.empty((cols, n), dtype=complex)
    worst = 0.0
    for kind, i, j in spec.pairs():
        lam = spec.poles[i]
        x = spec.X[:, i]
        if kind == "real":
            lam, x = lam.real, x.real
        stack = np.vstack([dm.X1 - lam * dm.X0, dm.X0])
        rhs = np.concatenate([np.zeros(n, dtype=x.dtype), x])
        m_vec = pseudoinverse(stack, tol) @ rhs
        res = np.linalg.norm(stack @ m_vec - rhs)
        bound = tol.residual_tol * (np.linalg.norm(x) + np.linalg.norm(stack, 2) * np.linalg.norm(m_vec))
        worst = max(worst, res / max(np.linalg.norm(x), np.finfo(float).tiny))
        if not res <= bound:
            raise InfeasibleError(
                f"eigenvector {i} for pole {spec.poles[i]} is not attainable "
                f"(residual {res:.3e} > {bound:.3e}); it lies outside the admissible subspace")
        if kind == "pair":
            M[:, i], M[:, j] = m_vec.real, m_vec.imag
            Mc[:, i], Mc[:, j] = m_vec, m_vec.conj()
        else:
            M[:, i] = Mc[:, i] = m_vec.real
    return _finish(dm, spec, M, Mc, tol, extra={"max_column_residual": float(worst)})


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    feasible: bool
    range_basis: np.ndarray
    residual: float
    delta_norm: float


def feasibility_report(dm: DataMatrices, A, spec: PoleSpec, tol: Tolerance = DEFAULT_TOL) -> FeasibilityReport:
    """Check ``A - X Lambda X^-1`` against the input range computed from data.

    The range of ``X1 [X0; U0]^+ [0; I_m]`` equals the range of ``B`` for
    rich data; the eigenstructure is feasible iff every column of
    ``A - X Lambda X^-1`` lies in it. Needs ``A``, so this is a model-assisted
    check.
    """
    if spec.X is None:
        raise InvalidInputError("feasibility needs eigenvectors X")
    A = as_matrix(A, "A")
    n, m = dm.n, dm.m
    if A.shape != (n, n):
        raise InvalidInputError(f"A must be {n}x{n}")
    X = spec.X
    if numerical_rank(X, tol) < n:
        raise InvalidInputError("X is singular")
    sel = np.vstack([np.zeros((n, m)), np.eye(m)])
    G = dm.X1 @ pseudoinverse(dm.stacked, tol) @ sel
    Q = range_basis(G, tol)
    delta = A - (X * spec.poles) @ np.linalg.inv(X)
    if np.abs(delta.imag).max() <= 1e-10 * max(1.0, np.abs(delta).max()):
        delta = delta.real
    out = delta - Q @ (Q.conj().T @ delta)
    residual = float(np.linalg.norm(out))
    dnorm = float(np.linalg.norm(delta))
    scale = max(dnorm, float(np.linalg.norm(A)), np.finfo(float).tiny)
    return FeasibilityReport(feasible=bool(residual <= tol.residual_tol * scale),
                             range_basis=Q, residual=residual, delta_norm=dnorm)
