"""Lanczos iteration for the lowest eigenvalue of a symmetric operator.

Full reorthogonalisation is used throughout; the Krylov basis is kept in
memory, which is fine for the state spaces handled here (<= 10! entries and
a few hundred iterations). Optionally the constant vector is projected out
at every step, which removes the known kernel of a Markov generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

__all__ = ["LanczosResult", "lanczos_smallest"]


@dataclass
class LanczosResult:
    value: float
    vector: np.ndarray
    residual: float
    iterations: int
    converged: bool


def _project(v: np.ndarray, deflate_constant: bool) -> np.ndarray:
    if deflate_constant:
        v = v - v.mean()
    return v


def lanczos_smallest(matvec: Callable[[np.ndarray], np.ndarray], dim: int, *,
                     tol: float = 1e-8, maxiter: int = 500,
                     deflate_constant: bool = True, seed: int = 0,
                     check_every: int = 5) -> LanczosResult:
    """Smallest eigenpair of a symmetric operator (restricted to mean-zero vectors).

    Convergence is declared when the Ritz residual ``beta_k |s_k|`` of the
    lowest Ritz value drops below ``tol``; the returned ``residual`` is the
    true residual norm ``||A y - theta y||`` of the unit Ritz vector.
    """
    rng = np.random.default_rng(seed)
    maxiter = min(maxiter, dim - (1 if deflate_constant else 0))
    q = _project(rng.standard_normal(dim), deflate_constant)
    q /= np.linalg.norm(q)
    basis = np.empty((maxiter + 1, dim))
    basis[0] = q
    alphas: list[float] = []
    betas: list[float] = []
    theta, s = np.nan, None
    converged = False
    j = 0
    for j in range(maxiter):
        w = _project(matvec(basis[j]), deflate_constant)
        alpha = float(basis[j] @ w)
        w -= alpha * basis[j]
        if j:
            w -= betas[-1] * basis[j - 1]
        for _ in range(2):
            w -= basis[: j + 1].T @ (basis[: j + 1] @ w)
        w = _project(w, deflate_constant)
        beta = float(np.linalg.norm(w))
        alphas.append(alpha)
        exhausted = beta < 1e-12 * max(1.0, abs(alpha))
        if exhausted or j % check_every == check_every - 1 or j == maxiter - 1:
            vals, vecs = eigh_tridiagonal(np.array(alphas), np.array(betas),
                                          select="i", select_range=(0, 0))
            theta, s = float(vals[0]), vecs[:, 0]
            if exhausted or beta * abs(s[-1]) < tol:
                converged = True
                break
        betas.append(beta)
        basis[j + 1] = w / beta
    k = len(alphas)
    y = basis[:k].T @ s
    y /= np.linalg.norm(y)
    r = _project(matvec(y), deflate_constant) - theta * y
    return LanczosResult(value=theta, vector=y, residual=float(np.linalg.norm(r)),
                         iterations=k, converged=converged)
