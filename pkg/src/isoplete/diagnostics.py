"""Identifiability diagnostics for a matrix under a fixed sampling set.

Ranks are compared with one shared absolute cutoff, ``RANK_TOL`` times the
largest singular value of the full matrix, applied to every sampled
submatrix. Relative condition numbers are available through two routes:
``"pinv"`` evaluates ``1 / ||M pinv(M[w])||^2`` directly, ``"eigen"`` takes
the smallest eigenvalue of ``U[w].T U[w]`` from the left singular vectors
(valid only when the sampled rows preserve the rank).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np

from .errors import BudgetExceededError, InvalidInputError, UndefinedQuantityError
from .linalg import coherence, pinv, skinny_svd, spectral_norm
from .sampling import SamplingSet

RANK_TOL = 1e-9
EXACT_BUDGET = 10**6
DEFAULT_TRIALS = 10**4

ROUTES = ("pinv", "eigen")


def _cutoff(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return RANK_TOL * spectral_norm(M)


def _rank(M: np.ndarray, cutoff: float) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.count_nonzero(s > cutoff))


@dataclass(frozen=True)
class KIsomerism:
    """Outcome of a k-isomerism test.

    ``certain`` is False only for a randomized ``True`` answer.
    """

    isomeric: bool
    certain: bool
    witness_rows: tuple | None = None

    def __bool__(self) -> bool:
        return self.isomeric


def is_k_isomeric(M, k: int, mode: str = "exact", trials: int = DEFAULT_TRIALS,
                  seed=None, budget: int = EXACT_BUDGET) -> KIsomerism:
    """Test whether every k-row sampled submatrix of ``M`` keeps ``rank(M)``.

    ``mode="exact"`` enumerates all ``C(m, k)`` subsets and refuses when that
    exceeds ``budget``. ``mode="randomized"`` checks ``trials`` random subsets;
    a ``False`` answer is certain, ``True`` is not.
    """
    M = np.asarray(M, dtype=float)
    m = M.shape[0]
    if not 1 <= k <= m:
        raise InvalidInputError(f"k must lie in [1, {m}]")
    cutoff = _cutoff(M)
    r = _rank(M, cutoff)
    if k < r:
        return KIsomerism(False, True)
    if k == m:
        return KIsomerism(True, True)

    if mode == "exact":
        total = math.comb(m, k)
        if total > budget:
            raise BudgetExceededError(
                f"C({m}, {k}) = {total} subsets exceed budget {budget}; use mode='randomized'")
        for rows in combinations(range(m), k):
            if _rank(M[list(rows)], cutoff) < r:
                return KIsomerism(False, True, rows)
        return KIsomerism(True, True)
    if mode == "randomized":
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            rows = np.sort(rng.choice(m, size=k, replace=False))
            if _rank(M[rows], cutoff) < r:
                return KIsomerism(False, True, tuple(int(i) for i in rows))
        return KIsomerism(True, False)
    raise InvalidInputError(f"unknown mode {mode!r}")


def min_isomeric_k(M, mode: str = "exact", **kwargs) -> int:
    """Smallest k for which ``M`` is k-isomeric (binary search on monotone k)."""
    M = np.asarray(M, dtype=float)
    r = _rank(M, _cutoff(M))
    if r == 0:
        raise UndefinedQuantityError("min_isomeric_k is undefined for the zero matrix")
    lo, hi = r, M.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if is_k_isomeric(M, mid, mode=mode, **kwargs).isomeric:
            hi = mid
        else:
            lo = mid + 1
    return lo


def _check_rows(M: np.ndarray, omega: SamplingSet) -> None:
    if M.shape[0] != omega.m:
        raise InvalidInputError(
            f"matrix has {M.shape[0]} rows but sampling set has {omega.m}")


def column_rank_deficiency(M, omega: SamplingSet) -> np.ndarray:
    """Boolean vector over Omega's columns: True where ``M[Omega^j]`` loses rank."""
    M = np.asarray(M, dtype=float)
    _check_rows(M, omega)
    cutoff = _cutoff(M)
    r = _rank(M, cutoff)
    mask = omega.mask
    return np.array([_rank(M[mask[:, j]], cutoff) < r for j in range(omega.n)], dtype=bool)


def is_omega_isomeric(M, omega: SamplingSet) -> bool:
    """``rank(M[Omega^j, :]) == rank(M)`` for every column j of Omega.

    ``M`` is m x l with m matching Omega's row count; l need not equal n.
    """
    M = np.asarray(M, dtype=float)
    _check_rows(M, omega)
    omega.require_nonempty_columns()
    return not column_rank_deficiency(M, omega).any()


def is_pair_isomeric(L, omega: SamplingSet) -> bool:
    """``L`` is Omega-isomeric and ``L.T`` is Omega.T-isomeric."""
    L = np.asarray(L, dtype=float)
    omega.require_nonempty_lines()
    return is_omega_isomeric(L, omega) and is_omega_isomeric(L.T, omega.transpose())


def _gamma_pinv(M: np.ndarray, rows: np.ndarray, cutoff: float) -> float:
    sub = M[rows]
    if sub.size == 0 or not np.any(sub):
        raise UndefinedQuantityError("sampled submatrix is zero")
    G = M @ pinv(sub, atol=cutoff)
    return float(1.0 / spectral_norm(G) ** 2)


def _gamma_eigen(U: np.ndarray, rows: np.ndarray) -> float:
    Uw = U[rows]
    return float(np.linalg.eigvalsh(Uw.T @ Uw)[0])


def _index_vector(omega_1d, m: int) -> np.ndarray:
    rows = np.asarray(omega_1d)
    if rows.dtype == bool:
        if rows.shape != (m,):
            raise InvalidInputError("boolean row selector has wrong length")
        return rows
    sel = np.zeros(m, dtype=bool)
    rows = rows.astype(int)
    if rows.size and (rows.min() < 0 or rows.max() >= m):
        raise InvalidInputError("row index out of range")
    sel[rows] = True
    return sel


def gamma_1d(M, rows, route: str = "pinv") -> float:
    """Relative condition number of ``M`` w.r.t. the sampled rows ``rows``.

    ``rows`` may be an index array or a boolean selector of length m.
    """
    M = np.asarray(M, dtype=float)
    sel = _index_vector(rows, M.shape[0])
    cutoff = _cutoff(M)
    if route == "pinv":
        return _gamma_pinv(M, sel, cutoff)
    if route == "eigen":
        sub = M[sel]
        if sub.size == 0 or not np.any(sub):
            raise UndefinedQuantityError("sampled submatrix is zero")
        svd = skinny_svd(M, atol=cutoff)
        if _rank(sub, cutoff) < svd.rank:
            raise UndefinedQuantityError(
                "eigen route requires the sampled rows to preserve rank(M)")
        return _gamma_eigen(svd.U, sel)
    raise InvalidInputError(f"unknown route {route!r}")


def gamma_2d(M, omega: SamplingSet, route: str = "pinv") -> tuple[float, np.ndarray]:
    """``min_j gamma(M, Omega^j)`` and the per-column values."""
    M = np.asarray(M, dtype=float)
    _check_rows(M, omega)
    mask = omega.mask
    if route == "pinv":
        cutoff = _cutoff(M)
        per = np.array([_gamma_pinv(M, mask[:, j], cutoff) for j in range(omega.n)])
    elif route == "eigen":
        cutoff = _cutoff(M)
        svd = skinny_svd(M, atol=cutoff)
        per = np.empty(omega.n)
        for j in range(omega.n):
            sub = M[mask[:, j]]
            if sub.size == 0 or not np.any(sub):
                raise UndefinedQuantityError(f"sampled submatrix for column {j} is zero")
            if _rank(sub, cutoff) < svd.rank:
                raise UndefinedQuantityError(
                    f"eigen route requires rank preservation (column {j} is deficient)")
            per[j] = _gamma_eigen(svd.U, mask[:, j])
    else:
        raise InvalidInputError(f"unknown route {route!r}")
    return float(per.min()), per


def gamma_pair(L, omega: SamplingSet, route: str = "pinv") -> float:
    """``min(gamma_Omega(L), gamma_Omega.T(L.T))``."""
    L = np.asarray(L, dtype=float)
    g_col, _ = gamma_2d(L, omega, route)
    g_row, _ = gamma_2d(L.T, omega.transpose(), route)
    return min(g_col, g_row)


def projection_gap(L, omega: SamplingSet) -> float:
    """``max_j (1 - lambda_min(U.T D_j U))`` for the column space U of ``L``.

    Equals the operator norm of ``P_U P_Omega^perp P_U`` when ``L`` is
    Omega-isomeric, and hence ``1 - gamma_Omega(L)``.
    """
    L = np.asarray(L, dtype=float)
    svd = skinny_svd(L, atol=_cutoff(L))
    mask = omega.mask
    return float(max(1.0 - _gamma_eigen(svd.U, mask[:, j]) for j in range(omega.n)))


def sufficient_fraction(mu0: float, r0: int, alpha: float) -> float:
    """Per-line observed fraction above which isomerism and ``gamma > alpha`` follow."""
    if mu0 < 1 or r0 < 1:
        raise InvalidInputError("need mu0 >= 1 and r0 >= 1")
    if not 0 <= alpha < 1:
        raise InvalidInputError("alpha must lie in [0, 1)")
    return 1.0 - (1.0 - alpha) / (mu0 * r0)


def coherence_condition_holds(mu0: float, r0: int, rho: float, alpha: float = 0.0) -> bool:
    """Coherence-based sufficient condition: ``rho > 1 - (1 - alpha) / (mu0 r0)``.

    ``rho`` is the smallest observed fraction over rows and columns
    (:meth:`SamplingSet.min_observed_fraction`).
    """
    return rho > sufficient_fraction(mu0, r0, alpha)


def _column_witness(L: np.ndarray, omega: SamplingSet) -> np.ndarray | None:
    svd = skinny_svd(L, atol=_cutoff(L))
    if svd.rank == 0:
        return None
    deficient = np.flatnonzero(column_rank_deficiency(L, omega))
    if deficient.size == 0:
        return None
    j = int(deficient[0])
    sel = omega.mask[:, j]
    Uj = svd.U[sel]
    if Uj.shape[0] == 0:
        b = np.zeros(svd.rank)
        b[0] = 1.0
    else:
        # last right singular vector spans (part of) the null space of U[Omega^j]
        b = np.linalg.svd(Uj, full_matrices=True)[2][-1]
    delta = np.zeros_like(L)
    delta[:, j] = svd.U @ b
    delta[sel, j] = 0.0
    return delta / np.linalg.norm(delta)


def witness_nonidentifiability(L, omega: SamplingSet) -> np.ndarray | None:
    """A unit-norm ``Delta != 0`` vanishing on Omega with ``rank(L + Delta) <= rank(L)``.

    Returns None when ``L`` is Omega/Omega.T-isomeric. The first rank-deficient
    column j (lowest index) of Omega yields ``Delta = U b e_j.T`` with b in
    the null space of ``U[Omega^j]``; otherwise the same construction is run
    on the transpose.
    """
    L = np.asarray(L, dtype=float)
    delta = _column_witness(L, omega)
    if delta is not None:
        return delta
    delta_t = _column_witness(L.T, omega.transpose())
    return None if delta_t is None else delta_t.T


@dataclass
class DiagnosticsReport:
    rank: int
    coherence: float
    omega_isomeric: bool
    omegaT_isomeric: bool
    gamma_omega: float
    gamma_omegaT: float
    gamma_pair: float
    per_column_gammas: np.ndarray
    per_row_gammas: np.ndarray
    deficient_columns: list = field(default_factory=list)
    deficient_rows: list = field(default_factory=list)
    witness: np.ndarray | None = None

    @property
    def pair_isomeric(self) -> bool:
        return self.omega_isomeric and self.omegaT_isomeric

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_column_gammas"] = self.per_column_gammas.tolist()
        d["per_row_gammas"] = self.per_row_gammas.tolist()
        d["witness"] = None if self.witness is None else self.witness.tolist()
        d["pair_isomeric"] = self.pair_isomeric
        return d


def _safe_gammas(M: np.ndarray, omega: SamplingSet) -> np.ndarray:
    # a zero sampled submatrix carries no information: report 0 instead of raising
    cutoff = _cutoff(M)
    mask = omega.mask
    out = np.zeros(omega.n)
    for j in range(omega.n):
        try:
            out[j] = _gamma_pinv(M, mask[:, j], cutoff)
        except UndefinedQuantityError:
            out[j] = 0.0
    return out


def diagnose(L, omega: SamplingSet, with_witness: bool = True) -> DiagnosticsReport:
    """Full identifiability report for ``L`` observed on ``omega``.

    Gammas come from the pinv route, which stays defined when a sampled
    submatrix is rank deficient; such lines are listed in
    ``deficient_columns`` / ``deficient_rows`` (0-based).
    """
    L = np.asarray(L, dtype=float)
    if L.shape != omega.shape:
        raise InvalidInputError(f"matrix shape {L.shape} != sampling shape {omega.shape}")
    omega.require_nonempty_lines()
    rank = _rank(L, _cutoff(L))
    if rank == 0:
        raise UndefinedQuantityError("diagnostics are undefined for the zero matrix")
    def_cols = column_rank_deficiency(L, omega)
    def_rows = column_rank_deficiency(L.T, omega.transpose())
    per_col = _safe_gammas(L, omega)
    per_row = _safe_gammas(L.T, omega.transpose())
    witness = witness_nonidentifiability(L, omega) if with_witness else None
    g_col, g_row = float(per_col.min()), float(per_row.min())
    return DiagnosticsReport(
        rank=rank,
        coherence=coherence(L, rank_tol=RANK_TOL),
        omega_isomeric=not def_cols.any(),
        omegaT_isomeric=not def_rows.any(),
        gamma_omega=g_col,
        gamma_omegaT=g_row,
        gamma_pair=min(g_col, g_row),
        per_column_gammas=per_col,
        per_row_gammas=per_row,
        deficient_columns=np.flatnonzero(def_cols).tolist(),
        deficient_rows=np.flatnonzero(def_rows).tolist(),
        witness=witness,
    )
