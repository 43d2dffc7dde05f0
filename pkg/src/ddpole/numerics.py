"""Tolerance-governed dense linear algebra.

All rank, nullspace and pseudoinverse decisions in the package go through this
module so that the threshold policy lives in one place: a singular value is
treated as zero when it is at most ``rel_rank_tol * sigma_max``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericFailure, UnsupportedError


@dataclass(frozen=True)
class Tolerance:
    """Thresholds for rank decisions and post-hoc verification.

    Attributes:
        rel_rank_tol: singular values ``<= rel_rank_tol * sigma_max`` count as zero.
        residual_tol: relative bound used when verifying computed results.
    """

    rel_rank_tol: float = 1e-10
    residual_tol: float = 1e-8

    def __post_init__(self):
        if not (self.rel_rank_tol > 0 and np.isfinite(self.rel_rank_tol)):
            raise InvalidInputError(f"rel_rank_tol must be positive, got {self.rel_rank_tol}")
        if not (self.residual_tol > 0 and np.isfinite(self.residual_tol)):
            raise InvalidInputError(f"residual_tol must be positive, got {self.residual_tol}")


DEFAULT_TOL = Tolerance()


def as_matrix(m, name="matrix") -> np.ndarray:
    """Return ``m`` as a finite 2-D array (real or complex)."""
    a = np.asarray(m)
    if a.dtype == object or not (np.issubdtype(a.dtype, np.number) or a.dtype == bool):
        raise InvalidInputError(f"{name} must be numeric")
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-D, got shape {a.shape}")
    if not np.issubdtype(a.dtype, np.complexfloating):
        a = a.astype(float)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return a


def _svd(a, full_matrices=False):
    try:
        return np.linalg.svd(a, full_matrices=full_matrices)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise NumericFailure(f"SVD did not converge: {exc}", {"shape": a.shape}) from exc


def _rank_from_singular_values(s, tol: Tolerance) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol.rel_rank_tol * s[0]))


def numerical_rank(m, tol: Tolerance = DEFAULT_TOL) -> int:
    """Number of singular values above ``rel_rank_tol * sigma_max``."""
    a = as_matrix(m)
    if a.size == 0:
        return 0
    return _rank_from_singular_values(np.linalg.svd(a, compute_uv=False), tol)


def nullspace_basis(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the right nullspace, one column per null direction.

    The column count is ``cols - numerical_rank(m)``; a full-column-rank input
    gives a ``cols x 0`` array.
    """
    a = as_matrix(m)
    cols = a.shape[1]
    if a.shape[0] == 0:
        return np.eye(cols, dtype=a.dtype)
    _, s, vh = _svd(a, full_matrices=True)
    r = _rank_from_singular_values(s, tol)
    return vh[r:].conj().T


def range_basis(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the column space of ``m``."""
    a = as_matrix(m)
    u, s, _ = _svd(a)
    r = _rank_from_singular_values(s, tol)
    return u[:, :r]


def pseudoinverse(m, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Moore-Penrose inverse with the package's relative rank cutoff."""
    a = as_matrix(m)
    u, s, vh = _svd(a)
    r = _rank_from_singular_values(s, tol)
    return (vh[:r].conj().T / s[:r]) @ u[:, :r].conj().T


def orthogonal_complement(v: np.ndarray, k: int = 1) -> np.ndarray:
    """``k`` orthonormal columns orthogonal to the columns of ``v``.

    ``v`` is ``n x (n - k)``; for ``n - k = 0`` an identity slice is returned.
    """
    n = v.shape[0]
    if v.shape[1] == 0:
        return np.eye(n, k, dtype=v.dtype)
    q, _ = np.linalg.qr(v, mode="complete")
    return q[:, n - k:]


def sort_eigenvalues(values) -> np.ndarray:
    """Indices ordering ``values`` by real part, then imaginary part."""
    values = np.asarray(values, dtype=complex)
    return np.lexsort((values.imag, values.real))


def eigendecomposition(m, tol: Tolerance = DEFAULT_TOL):
    """Eigenvalues and unit-norm eigenvectors in (real, imag) order.

    Returns:
        (eigenvalues, eigenvectors) with ``m @ eigenvectors[:, i] ==
        eigenvalues[i] * eigenvectors[:, i]`` up to ``residual_tol`` relative
        to ``||m||``.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"eigendecomposition needs a square matrix, got {a.shape}")
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure("eigenvalue iteration did not converge",
                             {"cond": float(np.linalg.cond(a)), "norm": float(np.linalg.norm(a))}) from exc
    order = sort_eigenvalues(w)
    w = w[order].astype(complex)
    v = v[:, order].astype(complex)
    v = v / np.linalg.norm(v, axis=0)
    scale = max(np.linalg.norm(a, 2), np.finfo(float).tiny)
    residual = np.linalg.norm(a @ v - v * w, axis=0).max(initial=0.0) / scale
    if residual > tol.residual_tol:
        raise NumericFailure("eigenpair residual above tolerance",
                             {"residual": float(residual), "cond": float(np.linalg.cond(a))})
    return w, v


def eigenvalue_condition_number(m, index: int, tol: Tolerance = DEFAULT_TOL) -> float:
    """Wilkinson condition ``||x|| ||y|| / |y^* x|`` of the eigenvalue at ``index``.

    ``index`` refers to the (real, imag) ordering used by :func:`eigendecomposition`.
    """
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"square matrix required, got {a.shape}")
    w, vl, vr = scipy.linalg.eig(a, left=True, right=True)
    order = sort_eigenvalues(w)
    w, vl, vr = w[order], vl[:, order], vr[:, order]
    if not 0 <= index < w.size:
        raise InvalidInputError(f"index {index} out of range for {w.size} eigenvalues")
    lam = w[index]
    sep = tol.rel_rank_tol ** 0.5 * max(1.0, abs(lam))
    if np.count_nonzero(np.abs(w - lam) <= sep) > 1:
        raise UnsupportedError(f"eigenvalue {lam} is repeated; condition number undefined")
    x, y = vr[:, index], vl[:, index]
    denom = abs(np.vdot(y, x))
    if denom == 0.0:
        return float("inf")
    return max(1.0, float(np.linalg.norm(x) * np.linalg.norm(y) / denom))
