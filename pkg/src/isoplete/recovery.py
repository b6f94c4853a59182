"""Closed-form recovery with a known dictionary and exact factor constructions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import is_omega_isomeric
from .errors import EmptyLineError, InvalidInputError, UndefinedQuantityError
from .linalg import DEFAULT_RANK_TOL, pinv, skinny_svd
from .sampling import PartialMatrix, SamplingSet

CRITICAL_TOL = 1e-6


@dataclass(frozen=True)
class FactorPair:
    """Dictionary ``A`` (m x p) and representation ``X`` (p x n)."""

    A: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        if self.A.shape[1] != self.X.shape[0]:
            raise InvalidInputError(
                f"inner dimensions differ: A is {self.A.shape}, X is {self.X.shape}")

    @property
    def product(self) -> np.ndarray:
        return self.A @ self.X

    def frobenius_objective(self) -> float:
        """``1/2 (||A||_F^2 + ||X||_F^2)``."""
        return 0.5 * (np.sum(self.A**2) + np.sum(self.X**2))

    def schatten_objective(self) -> float:
        """``||A||_* + 1/2 ||X||_F^2``."""
        return float(np.sum(np.linalg.svd(self.A, compute_uv=False)) + 0.5 * np.sum(self.X**2))


@dataclass(frozen=True)
class VectorRecovery:
    x: np.ndarray
    y_full: np.ndarray
    residual: float
    least_squares: bool


def recover_vector_l2(A, rows, y_b, tol: float = 1e-8) -> VectorRecovery:
    """Minimum-norm representation ``x = pinv(A[rows]) y_b`` and ``y_full = A x``.

    If ``y_b`` is not in the range of ``A[rows]`` the result is the
    least-squares fit and ``least_squares`` is set.
    """
    A = np.asarray(A, dtype=float)
    rows = np.asarray(rows, dtype=int)
    y_b = np.asarray(y_b, dtype=float).ravel()
    Ab = A[rows]
    if Ab.shape[0] != y_b.size:
        raise InvalidInputError("y_b length must match the number of observed rows")
    if not np.any(Ab):
        raise UndefinedQuantityError("observed rows of the dictionary are zero")
    x = pinv(Ab) @ y_b
    residual = float(np.linalg.norm(Ab @ x - y_b))
    scale = max(float(np.linalg.norm(y_b)), np.finfo(float).tiny)
    return VectorRecovery(x, A @ x, residual, residual > tol * scale)


def _column_pinv_solve(A: np.ndarray, mask: np.ndarray, values: np.ndarray) -> np.ndarray:
    p = A.shape[1]
    n = mask.shape[1]
    X = np.zeros((p, n))
    for j in range(n):
        sel = mask[:, j]
        Aj = A[sel]
        if np.any(Aj):
            X[:, j] = pinv(Aj, rank_tol=DEFAULT_RANK_TOL) @ values[sel, j]
    return X


def recover_matrix_frobenius(A, partial: PartialMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Column-wise minimum-Frobenius representation fitting the observations.

    Column j is ``pinv(A[Omega^j]) @ L[Omega^j, j]``; returns ``(X, A @ X)``.
    """
    A = np.asarray(A, dtype=float)
    if A.shape[0] != partial.shape[0]:
        raise InvalidInputError("dictionary row count must match the partial matrix")
    omega = partial.omega
    empty = omega.empty_columns()
    if empty.size:
        raise EmptyLineError("column", empty)
    zero_cols = [j for j in range(omega.n) if not np.any(A[omega.mask[:, j]])]
    if zero_cols:
        raise UndefinedQuantityError(f"dictionary vanishes on the rows sampled by columns {zero_cols}")
    X = _column_pinv_solve(A, omega.mask, partial.values)
    return X, A @ X


def _embedding(p: int, r: int) -> np.ndarray:
    if p < r:
        raise InvalidInputError(f"p={p} must be at least rank {r}")
    return np.eye(p, r)


def exact_factor_pair_frobenius(L0, p: int, Q=None) -> FactorPair:
    """``A = U S^{1/2} Q.T``, ``X = Q S^{1/2} V.T`` with Q the first r columns of I_p by default."""
    svd = skinny_svd(L0)
    Q = _embedding(p, svd.rank) if Q is None else np.asarray(Q, dtype=float)
    h = np.sqrt(svd.S)
    return FactorPair((svd.U * h) @ Q.T, Q @ (h[:, None] * svd.V.T))


def exact_factor_pair_schatten(L0, p: int, Q=None) -> FactorPair:
    """``A = U S^{2/3} Q.T``, ``X = Q S^{1/3} V.T``; attains the Schatten-2/3 bound."""
    svd = skinny_svd(L0)
    Q = _embedding(p, svd.rank) if Q is None else np.asarray(Q, dtype=float)
    return FactorPair((svd.U * svd.S ** (2.0 / 3.0)) @ Q.T,
                      Q @ (svd.S[:, None] ** (1.0 / 3.0) * svd.V.T))


@dataclass(frozen=True)
class CriticalPointReport:
    x_residual: float
    a_residual: float
    a_isomeric: bool
    xt_isomeric: bool
    tol: float = CRITICAL_TOL

    @property
    def is_critical(self) -> bool:
        return self.x_residual < self.tol and self.a_residual < self.tol


def _rel(diff: np.ndarray, ref: np.ndarray) -> float:
    return float(np.linalg.norm(diff) / max(np.linalg.norm(ref), 1.0))


def verify_critical_point(pair: FactorPair, partial: PartialMatrix,
                          tol: float = CRITICAL_TOL) -> CriticalPointReport:
    """Check that each factor solves its own subproblem with the other held fixed.

    X-side: X equals the minimum-norm X with ``P_Omega(A X) = P_Omega(L)``.
    A-side: A equals the minimum-norm A with ``P_Omega(A X) = P_Omega(L)``,
    obtained from the transposed problem with dictionary ``X.T``. The minimum
    norm solution is the same for every unitarily invariant norm once the
    fixed factor is isomeric, so this covers both the Frobenius and the
    nuclear-norm A-subproblem. Residuals are relative to ``max(1, ||factor||_F)``.
    """
    A, X = pair.A, pair.X
    omega: SamplingSet = partial.omega
    a_iso = is_omega_isomeric(A, omega)
    xt_iso = is_omega_isomeric(X.T, omega.transpose())
    X_opt = _column_pinv_solve(A, omega.mask, partial.values)
    A_opt = _column_pinv_solve(X.T, omega.mask.T, partial.values.T).T
    return CriticalPointReport(_rel(X - X_opt, X), _rel(A - A_opt, A), a_iso, xt_iso, tol)
