"""Model-based comparators and oracles.

Everything here needs ``(A, B)``: either the true pair (test oracles) or a
least-squares estimate from data (the comparison arm of the experiments).
All gains follow the ``u = -K x`` convention, i.e. they make
``(A - B K) X = X Lambda``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import _selection
from .errors import InfeasibleError, InvalidInputError, PreconditionError, UnidentifiableError
from .numerics import DEFAULT_TOL, Tolerance, nullspace_basis, numerical_rank, pseudoinverse
from .plant import LtiSystem, controllability_matrix, is_controllable
from .signals import DataMatrices
from .synthesis import PoleSpec


@dataclass(frozen=True, eq=False)
class IdentifiedModel:
    A_hat: np.ndarray
    B_hat: np.ndarray
    residual: float

    def system(self) -> LtiSystem:
        return LtiSystem(self.A_hat, self.B_hat)

    def to_json(self) -> dict:
        return {"A": self.A_hat.tolist(), "B": self.B_hat.tolist(), "residual": self.residual}


def identify_least_squares(dm: DataMatrices, tol: Tolerance = DEFAULT_TOL) -> IdentifiedModel:
    """Minimise ``||X1 - [A B][X0; U0]||_F`` over ``[A B]``.

    Raises:
        UnidentifiableError: ``rank [X0; U0] < n + m``.
    """
    n, m = dm.n, dm.m
    D = dm.stacked
    r = numerical_rank(D, tol) if D.shape[1] else 0
    if D.shape[1] < n + m or r < n + m:
        raise UnidentifiableError(f"rank [X0; U0] = {r} < n + m = {n + m}; (A, B) is not identifiable")
    AB = dm.X1 @ pseudoinverse(D, tol)
    residual = float(np.linalg.norm(dm.X1 - AB @ D))
    return IdentifiedModel(AB[:, :n], AB[:, n:], residual)


def _b_factors(B):
    """``B = [U0 U1] [Z; 0]`` with orthogonal ``[U0 U1]``."""
    Q, R = np.linalg.qr(B, mode="complete")
    m = B.shape[1]
    return Q[:, :m], Q[:, m:], R[:m]


def admissible_subspace(sys: LtiSystem, lam, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of ``{x : U1^T (A - lam I) x = 0}``, ``U1`` spanning ``N(B^T)``.

    These are the vectors that can be closed-loop eigenvectors for ``lam``; the
    basis has ``m`` columns when ``(A, B)`` is controllable.
    """
    _, U1, _ = _b_factors(sys.B)
    if U1.shape[1] == 0:
        return np.eye(sys.n)
    return nullspace_basis(U1.T @ (sys.A - lam * np.eye(sys.n)), tol)


def _target(spec: PoleSpec):
    if spec.X is None:
        raise InvalidInputError("an eigenvector matrix X is required")
    X = spec.X
    return X, np.linalg.inv(X)


def _realify(K):
    K = np.asarray(K)
    if np.iscomplexobj(K):
        if np.abs(K.imag).max(initial=0.0) > 1e-8 * max(1.0, np.abs(K).max()):
            raise InfeasibleError("eigenstructure is not conjugate-symmetric; no real gain exists")
        K = K.real
    return K


def eigenstructure_residual(sys: LtiSystem, K, spec: PoleSpec) -> float:
    """``||(A - B K) X - X Lambda||_F`` scaled by ``||X||_F`` and the problem size."""
    X = spec.X
    Acl = sys.A - sys.B @ K
    scale = np.linalg.norm(X) * max(1.0, np.linalg.norm(sys.A, 2), np.linalg.norm(sys.B @ K, 2),
                                    np.abs(spec.poles).max())
    return float(np.linalg.norm(Acl @ X - X * spec.poles) / scale)


def _checked(sys, K, spec, tol, what):
    res = eigenstructure_residual(sys, K, spec)
    if res > tol.residual_tol:
        raise InfeasibleError(f"{what}: (A - BK)X = X Lambda fails with residual {res:.3e}; "
                              "X is not assignable")
    return K


def kautsky_gain(sys: LtiSystem, spec: PoleSpec, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``K = Z^-1 U0^T (A - X Lambda X^-1)`` from the QR factors of ``B``."""
    X, Xinv = _target(spec)
    Ub, _, Z = _b_factors(sys.B)
    K = np.linalg.solve(Z, Ub.T @ (sys.A - (X * spec.poles) @ Xinv))
    return _checked(sys, _realify(K), spec, tol, "kautsky_gain")


def sylvester_gain(sys: LtiSystem, spec: PoleSpec, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Gain from ``A X - X Lambda + B G = 0`` as ``K = -G X^-1``.

    ``G`` is the least-squares solution for the given ``X``; it is accepted
    only if the Sylvester equation driven by ``-B G`` returns ``X`` again.
    """
    X, Xinv = _target(spec)
    ev = np.linalg.eigvals(sys.A)
    gap = np.abs(ev[:, None] - spec.poles[None, :]).min()
    if gap <= np.sqrt(tol.rel_rank_tol) * max(1.0, np.abs(ev).max()):
        raise PreconditionError(f"spectra of A and Lambda overlap (gap {gap:.2e})")
    G = -pseudoinverse(sys.B, tol) @ (sys.A @ X - X * spec.poles)
    X_back = scipy.linalg.solve_sylvester(sys.A.astype(complex), -np.diag(spec.poles), -sys.B @ G)
    if np.linalg.norm(X_back - X) > tol.residual_tol * np.linalg.cond(X) * np.linalg.norm(X):
        raise InfeasibleError("no G solves A X - X Lambda + B G = 0 for this X")
    K = -G @ Xinv
    return _checked(sys, _realify(K), spec, tol, "sylvester_gain")


def projector_gain(sys: LtiSystem, spec: PoleSpec, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``K = B^+ (A - X Lambda X^-1)`` under ``(I - B B^+)(X Lambda - A X) = 0``."""
    X, Xinv = _target(spec)
    Bp = pseudoinverse(sys.B, tol)
    gap = X * spec.poles - sys.A @ X
    off = gap - sys.B @ (Bp @ gap)
    scale = np.linalg.norm(X) * max(1.0, np.linalg.norm(sys.A, 2), np.abs(spec.poles).max())
    if np.linalg.norm(off) > tol.residual_tol * scale:
        raise InfeasibleError("projector condition (I - B B^+)(X Lambda - A X) = 0 violated")
    K = Bp @ (sys.A - (X * spec.poles) @ Xinv)
    return _checked(sys, _realify(K), spec, tol, "projector_gain")


def ackermann_gain(sys: LtiSystem, poles, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Single-input ``K = e_n^T C^-1 p(A)`` with ``p`` the desired characteristic polynomial."""
    if sys.m != 1:
        raise InvalidInputError("Ackermann's formula is single-input only")
    poles = np.asarray(poles, dtype=complex)
    if poles.size != sys.n:
        raise InvalidInputError(f"need {sys.n} poles")
    if not is_controllable(sys, tol):
        raise PreconditionError("(A, B) is not controllable")
    coeffs = np.poly(poles)
    if np.abs(coeffs.imag).max() > 1e-9 * np.abs(coeffs).max():
        raise InvalidInputError("poles must be closed under conjugation")
    coeffs = coeffs.real
    pA = np.zeros_like(sys.A)
    for c in coeffs:
        pA = pA @ sys.A + c * np.eye(sys.n)
    C = controllability_matrix(sys)
    last = np.zeros(sys.n)
    last[-1] = 1.0
    return np.linalg.solve(C.T, last).reshape(1, -1) @ pA


def model_based_place(sys: LtiSystem, poles, tol: Tolerance = DEFAULT_TOL, *,
                      sweeps: int = 20, seed=0) -> np.ndarray:
    """Robust multi-input placement on a known (or identified) model.

    Eigenvectors are picked inside the admissible subspaces of
    :func:`admissible_subspace` by the same greedy-then-sweep routine as the
    data-driven path, but measured in state space (``||x_i|| = 1``), which is
    the Kautsky-Nichols-Van Dooren conditioning criterion. The gain then comes
    from :func:`kautsky_gain`'s formula.
    """
    spec = poles if isinstance(poles, PoleSpec) else PoleSpec(poles)
    if spec.n != sys.n:
        raise InvalidInputError(f"need {sys.n} poles")
    spec.check_multiplicities(sys.m)
    if not is_controllable(sys, tol):
        raise PreconditionError("(A, B) is not controllable")
    rng = np.random.default_rng(seed)
    slots, cols = [], []
    for kind, i, j in spec.pairs():
        lam = spec.poles[i] if kind == "pair" else spec.poles[i].real
        slots.append(_selection.Slot(admissible_subspace(sys, lam, tol), kind == "pair"))
        cols.append((i, j))
    coeffs = _selection.select(slots, rng, tol, sweeps=sweeps)
    X = np.empty((sys.n, sys.n), dtype=complex)
    for slot, c, (i, j) in zip(slots, coeffs, cols):
        v = slot.W @ c
        X[:, i] = v
        if j != i:
            X[:, j] = v.conj()
    Ub, _, Z = _b_factors(sys.B)
    K = np.linalg.solve(Z, Ub.T @ (sys.A - (X * spec.poles) @ np.linalg.inv(X)))
    return K.real
