"""Eigenvector-direction selection shared by the data-driven and model-based paths.

Each closed-loop eigenvector is parameterised as ``v = W c`` with ``||c|| = 1``,
where ``W`` spans the directions admissible for its pole. A complex pole owns
one complex coefficient vector and contributes the real columns
``Re v, Im v``; its conjugate partner is implied.

Selection runs in two stages:

1. greedy random draws, keeping a draw only if it raises the rank of the
   columns chosen so far (bounded redraws);
2. Kautsky-Nichols-Van Dooren style sweeps: each ``c`` is replaced by the
   unit vector maximising ``|q^H W c|``, where ``q`` spans the complement of
   the other columns. This minimises ``||row_i(V^-1)|| * ||c_i||``.

With ``W = S_j`` (orthonormal basis of the model-based admissible subspace) the
sweep is the classical robust placement step. With ``W = X0 N_j`` (``N_j`` an
orthonormal nullspace basis of ``X1 - lambda_j X0``) the factor ``||c_i||`` is
``||m_i||``, the gain on measurement noise, so the sweep trades conditioning
against noise amplification using data only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import RankSelectionError
from .numerics import Tolerance, numerical_rank, orthogonal_complement

MAX_REDRAWS = 50


@dataclass(frozen=True)
class Slot:
    """One eigenvector to choose: real (one column) or complex (two columns)."""

    W: np.ndarray
    is_complex: bool

    @property
    def width(self) -> int:
        return 2 if self.is_complex else 1

    def columns(self, c: np.ndarray) -> np.ndarray:
        v = self.W @ c
        if self.is_complex:
            return np.column_stack([v.real, v.imag])
        return v.real.reshape(-1, 1)


def _assemble(slots: Sequence[Slot], coeffs) -> np.ndarray:
    return np.hstack([s.columns(c) for s, c in zip(slots, coeffs)])


def _score(V: np.ndarray, tol: Tolerance) -> float:
    s = np.linalg.svd(V, compute_uv=False)
    if s[-1] <= tol.rel_rank_tol * s[0]:
        return np.inf
    return float(np.sqrt(np.sum(1.0 / s**2)))


def _draw(rng: np.random.Generator, slot: Slot) -> np.ndarray:
    d = slot.W.shape[1]
    c = rng.standard_normal(d)
    if slot.is_complex:
        c = c + 1j * rng.standard_normal(d)
    return c / np.linalg.norm(c)


def greedy_initial(slots: Sequence[Slot], rng: np.random.Generator, tol: Tolerance,
                   accept: Callable[[int, np.ndarray], bool] | None = None, strict: bool = True):
    """Random coefficients, redrawn until each slot adds ``width`` to the rank.

    With ``strict=False`` a slot that never raises the rank keeps its last draw.
    """
    coeffs = []
    cols = []
    rank = 0
    for k, slot in enumerate(slots):
        for _ in range(MAX_REDRAWS):
            c = _draw(rng, slot)
            if accept is not None and not accept(k, c):
                continue
            new = slot.columns(c)
            new = new / np.maximum(np.linalg.norm(new, axis=0), np.finfo(float).tiny)
            trial = np.hstack(cols + [new])
            if numerical_rank(trial, tol) == rank + slot.width:
                coeffs.append(c)
                cols.append(new)
                rank += slot.width
                break
        else:
            if not strict:
                new = slot.columns(c)
                coeffs.append(c)
                cols.append(new / np.maximum(np.linalg.norm(new, axis=0), np.finfo(float).tiny))
                continue
            raise RankSelectionError(
                f"could not find an independent direction for slot {k} in {MAX_REDRAWS} draws",
                {"slot": k, "rank_so_far": rank},
            )
    return coeffs


def refine(slots: Sequence[Slot], coeffs, tol: Tolerance, sweeps: int = 10):
    """Conditioning sweeps; returns the best coefficients seen and their score."""
    coeffs = [np.array(c) for c in coeffs]
    V = _assemble(slots, coeffs)
    best = (_score(V, tol), [c.copy() for c in coeffs])
    offsets = np.cumsum([0] + [s.width for s in slots])
    for _ in range(sweeps):
        for k, slot in enumerate(slots):
            lo, hi = offsets[k], offsets[k + 1]
            others = np.delete(V, np.s_[lo:hi], axis=1)
            Q = orthogonal_complement(others, slot.width)
            q = Q[:, 0] + 1j * Q[:, 1] if slot.is_complex else Q[:, 0]
            c = slot.W.conj().T @ q
            nc = np.linalg.norm(c)
            if nc <= np.finfo(float).eps * max(np.linalg.norm(slot.W), 1.0):
                continue
            if not slot.is_complex:
                c = c.real
            coeffs[k] = c / nc
            V[:, lo:hi] = slot.columns(coeffs[k])
        score = _score(V, tol)
        if score < best[0] * (1 - 1e-9):
            best = (score, [c.copy() for c in coeffs])
        elif np.isfinite(score) and score >= best[0] * (1 - 1e-6):
            break
    return best[1], best[0]


def select(slots: Sequence[Slot], rng: np.random.Generator, tol: Tolerance, sweeps: int = 10,
           accept: Callable[[int, np.ndarray], bool] | None = None, strict: bool = True):
    """Greedy start plus refinement; raises if the result is rank deficient (when ``strict``)."""
    coeffs = greedy_initial(slots, rng, tol, accept, strict)
    if sweeps > 0:
        coeffs, score = refine(slots, coeffs, tol, sweeps)
    else:
        score = _score(_assemble(slots, coeffs), tol)
    if strict and not np.isfinite(score):
        raise RankSelectionError("selected eigenvector directions are dependent", {"score": score})
    return coeffs
