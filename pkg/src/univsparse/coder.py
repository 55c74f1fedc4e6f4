"""Sparse coders and the fixed-support representation error.

``omp`` and ``group_omp`` share one greedy engine that runs on a batch of
signals at once: correlations for the whole batch come from a single matrix
product, and every signal keeps its own orthonormal basis of the selected
atoms (classical Gram-Schmidt, repeated when the first pass cancels too much,
which keeps the basis orthogonal to working precision). The reported error is always recomputed from scratch by
least squares on the final support.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError
from .randmodel import Dictionary, Signal

__all__ = [
    "SparseApproximation",
    "block_exact",
    "block_exact_batch",
    "eval_error",
    "greedy_supports",
    "group_omp",
    "omp",
]

# an atom whose component orthogonal to the current span is below this
# fraction of its norm is treated as already spanned
SPAN_TOL = 1e-10
REORTH_RATIO = 0.7


@dataclass(frozen=True, eq=False)
class SparseApproximation:
    support: tuple
    coefficients: np.ndarray
    relative_error: float


def _as_matrix(dictionary):
    if isinstance(dictionary, Dictionary):
        return dictionary.entries
    arr = np.asarray(dictionary, dtype=np.float64)
    if arr.ndim != 2:
        raise DomainError("dictionary must be a 2-D array")
    return arr


def _as_vector(x):
    if isinstance(x, Signal):
        return x.values
    v = np.asarray(x, dtype=np.float64).ravel()
    return v


def _rescale_rows(X):
    # the normalized error is scale invariant; rescaling keeps tiny or huge
    # signals away from under/overflow in the squared norms
    peak = np.max(np.abs(X), axis=1, keepdims=True)
    return X / np.where(peak > 0, peak, 1.0)


def eval_error(x, dictionary, support):
    """Least-squares fit of ``x`` on the atoms in ``support``.

    Returns ``(relative_error, coefficients)`` where the coefficients are the
    minimum-norm least-squares solution (so rank-deficient supports are fine).
    """
    v = _as_vector(x)
    phi = _as_matrix(dictionary)
    support = [int(j) for j in support]
    if not support:
        raise DomainError("support must contain at least one atom")
    if len(set(support)) != len(support) or min(support) < 0 or max(support) >= phi.shape[1]:
        raise DomainError(f"invalid support {support!r} for n={phi.shape[1]}")
    peak = np.max(np.abs(v)) if v.size else 0.0
    if not peak > 0:
        raise DomainError("signal must have positive norm")
    u = v / peak
    sub = phi[:, support]
    coef, *_ = np.linalg.lstsq(sub, u, rcond=None)
    err = np.linalg.norm(u - sub @ coef) / np.linalg.norm(u)
    return float(min(err, 1.0)), coef * peak


def greedy_supports(X, phi, k, eps_target=0.0, group_size=None):
    """Greedy atom selection for each row of ``X``.

    At every step the atom maximizing |<r, phi_j>| / ||phi_j|| is added (ties go
    to the lowest index) and the residual is re-projected. A signal stops once
    its relative residual is at most ``eps_target``, when its residual vanishes,
    or after ``k`` atoms. With ``group_size=m`` the atoms form consecutive
    groups of ``m`` and at most one atom per group is chosen.
    """
    X = _rescale_rows(np.atleast_2d(np.asarray(X, dtype=np.float64)))
    B, d = X.shape
    n = phi.shape[1]
    if phi.shape[0] != d:
        raise DomainError(f"signal length {d} does not match dictionary rows {phi.shape[0]}")
    if not 1 <= k <= d:
        raise DomainError(f"need 1 <= k <= d, got k={k}")
    if group_size is not None and group_size * k != n:
        raise ConfigurationError(f"grouping mismatch: n={n} is not k*m = {k}*{group_size}")
    norms = np.sqrt(np.einsum("ij,ij->j", phi, phi))
    inv_norms = np.where(norms > 0, 1.0 / np.where(norms > 0, norms, 1.0), 0.0)

    xnorm = np.linalg.norm(X, axis=1)
    R = X.copy()
    Q = np.zeros((B, k, d))
    excluded = np.zeros((B, n), dtype=bool)
    active = xnorm > 0
    supports = [[] for _ in range(B)]
    rows = np.arange(B)
    for j in range(k):
        rnorm = np.linalg.norm(R, axis=1)
        active &= rnorm > eps_target * xnorm
        active &= rnorm > 0
        if not active.any():
            break
        corr = np.abs(R @ phi) * inv_norms
        corr[excluded] = -1.0
        sel = np.argmax(corr, axis=1)
        A = phi[:, sel].T.copy()
        if j:
            basis = Q[:, :j]
            for _ in range(2):
                before = np.linalg.norm(A, axis=1)
                coeffs = np.matmul(basis, A[:, :, None])[:, :, 0]
                A -= np.matmul(coeffs[:, None, :], basis)[:, 0]
                # Kahan's criterion: a second pass only if the projection
                # cancelled a large part of the vector
                if np.all(np.linalg.norm(A, axis=1) >= REORTH_RATIO * before):
                    break
        anorm = np.linalg.norm(A, axis=1)
        spanned = anorm <= SPAN_TOL * norms[sel]
        if group_size is None:
            excluded[rows, sel] = True
        else:
            g = sel // group_size
            for b in np.flatnonzero(active):
                excluded[b, g[b] * group_size:(g[b] + 1) * group_size] = True
        # a spanned pick makes no progress; that signal is finished
        active &= ~spanned
        q = np.where(active[:, None], A / np.where(anorm > 0, anorm, 1.0)[:, None], 0.0)
        Q[:, j] = q
        R -= np.einsum("bd,bd->b", q, R)[:, None] * q
        for b in np.flatnonzero(active):
            supports[b].append(int(sel[b]))
    return supports


def _finish(x, phi, support):
    if not support:
        return SparseApproximation((), np.zeros(0), 1.0)
    err, coef = eval_error(x, phi, support)
    return SparseApproximation(tuple(support), coef, err)


def omp(x, dictionary, k, eps_target=0.0):
    """Orthogonal matching pursuit with at most ``k`` atoms."""
    v = _as_vector(x)
    phi = _as_matrix(dictionary)
    if not 0.0 <= eps_target <= 1.0:
        raise DomainError(f"eps_target must lie in [0, 1], got {eps_target!r}")
    (support,) = greedy_supports(v[None, :], phi, k, eps_target)
    return _finish(v, phi, support)


def group_omp(x, dictionary, k, m, eps_target=0.0):
    """OMP restricted to at most one atom from each of ``k`` groups of ``m``
    consecutive atoms."""
    v = _as_vector(x)
    phi = _as_matrix(dictionary)
    if not 0.0 <= eps_target <= 1.0:
        raise DomainError(f"eps_target must lie in [0, 1], got {eps_target!r}")
    (support,) = greedy_supports(v[None, :], phi, k, eps_target, group_size=m)
    return _finish(v, phi, support)


def block_exact_batch(X, blocks):
    """Exact one-atom-per-block coding for a batch of signals.

    ``X`` has shape (B, d) and ``blocks`` shape (k, d/k, m). Returns
    ``(supports, coefficients, errors)`` with supports as global atom indices
    of shape (B, k). Errors are recomputed from the residual x - Phi alpha.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    peak = np.max(np.abs(X), axis=1)
    peak = np.where(peak > 0, peak, 1.0)
    X = X / peak[:, None]
    k, rows, m = blocks.shape
    B = X.shape[0]
    if X.shape[1] != k * rows:
        raise DomainError(f"signal length {X.shape[1]} does not match dictionary rows {k * rows}")
    Xb = X.reshape(B, k, rows)
    atom_sq = np.einsum("irj,irj->ij", blocks, blocks)
    proj = np.einsum("bir,irj->bij", Xb, blocks)
    score = proj * proj / atom_sq
    best = np.argmax(score, axis=2)
    bi, ii = np.meshgrid(np.arange(B), np.arange(k), indexing="ij")
    coef = proj[bi, ii, best] / atom_sq[ii, best]
    chosen = blocks[ii, :, best]  # (B, k, rows)
    resid = Xb - coef[:, :, None] * chosen
    xnorm = np.linalg.norm(X, axis=1)
    err = np.sqrt(np.einsum("bir,bir->b", resid, resid)) / xnorm
    supports = best + (np.arange(k) * m)[None, :]
    return supports, coef * peak[:, None], np.minimum(err, 1.0)


def block_exact(x, dictionary, eps_target=None):
    """Best single atom in every diagonal block of a block-diagonal dictionary.

    For block i the atom maximizing ||P_phi x_i||^2 / ||x_i||^2 is kept, so the
    squared error equals 1 - sum_i gamma_i Z_i with gamma_i = ||x_i||^2/||x||^2.
    ``eps_target`` is accepted for interface symmetry and ignored.
    """
    if not isinstance(dictionary, Dictionary) or not dictionary.is_block:
        raise ConfigurationError("block_exact requires a block-diagonal Dictionary")
    v = _as_vector(x)
    supports, coef, err = block_exact_batch(v[None, :], dictionary.blocks)
    return SparseApproximation(tuple(int(j) for j in supports[0]), coef[0], float(err[0]))
