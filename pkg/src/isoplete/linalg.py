"""Dense linear-algebra kernels: skinny SVD, pseudo-inverse, SVT, coherence."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, UndefinedQuantityError

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class SkinnySvd:
    """Rank-revealing thin SVD ``M = U @ diag(S) @ V.T``.

    ``U`` is m x r, ``S`` has r positive descending entries, ``V`` is n x r.
    """

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return int(self.S.size)

    def reconstruct(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.T


def _as_finite_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise InvalidInputError(f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError("matrix contains non-finite entries")
    return M


def skinny_svd(M, rank_tol: float = DEFAULT_RANK_TOL, atol: float | None = None) -> SkinnySvd:
    """Thin SVD keeping singular values ``s > rank_tol * s_max``.

    If ``atol`` is given it is used as an absolute cutoff instead of the
    relative one. A rank-0 input yields empty factors.
    """
    M = _as_finite_matrix(M)
    m, n = M.shape
    if rank_tol < 0:
        raise InvalidInputError("rank_tol must be non-negative")
    if M.size == 0:
        return SkinnySvd(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    cutoff = atol if atol is not None else rank_tol * (s[0] if s.size else 0.0)
    r = int(np.count_nonzero(s > cutoff))
    return SkinnySvd(U[:, :r].copy(), s[:r].copy(), Vt[:r].T.copy())


def pinv(M, rank_tol: float = DEFAULT_RANK_TOL, atol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudo-inverse ``V diag(1/S) U.T`` from :func:`skinny_svd`.

    Singular values at or below the cutoff are dropped rather than inverted.
    """
    svd = skinny_svd(M, rank_tol=rank_tol, atol=atol)
    return (svd.V / svd.S) @ svd.U.T


def matrix_rank(M, rank_tol: float = DEFAULT_RANK_TOL, atol: float | None = None) -> int:
    M = _as_finite_matrix(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    cutoff = atol if atol is not None else rank_tol * (s[0] if s.size else 0.0)
    return int(np.count_nonzero(s > cutoff))


def svt(M, tau: float) -> np.ndarray:
    """Singular value thresholding: ``U max(S - tau, 0) V.T``.

    This is the proximal operator of ``tau * ||.||_*``.
    """
    return svt_with_values(M, tau)[0]


def svt_with_values(M, tau: float) -> tuple[np.ndarray, np.ndarray]:
    """:func:`svt` plus the surviving (shrunk, positive) singular values."""
    if tau < 0:
        raise InvalidInputError("tau must be non-negative")
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return M.copy(), np.zeros(0)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - tau, 0.0)
    k = int(np.count_nonzero(s))
    return (U[:, :k] * s[:k]) @ Vt[:k], s[:k]


def coherence(M, rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """Coherence ``mu(M)``: the largest scaled squared row norm of U or V.

    ``max(max_i m/r ||U_i||^2, max_j n/r ||V_j||^2)``.
    """
    svd = skinny_svd(M, rank_tol=rank_tol)
    r = svd.rank
    if r == 0:
        raise UndefinedQuantityError("coherence is undefined for the zero matrix")
    m, n = svd.U.shape[0], svd.V.shape[0]
    row_u = np.max(np.sum(svd.U**2, axis=1)) * m / r
    row_v = np.max(np.sum(svd.V**2, axis=1)) * n / r
    return float(max(row_u, row_v))


def spectral_norm(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def nuclear_norm(M) -> float:
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(M, compute_uv=False)))
