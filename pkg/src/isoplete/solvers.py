"""Completion solvers: convex nuclear norm, bilinear Frobenius, IsoDP.

All three work on the penalized forms

* convex:   ``lam ||L||_* + 1/2 ||P_Omega(L - L0)||_F^2``
* bilinear: ``lam/2 (||A||_F^2 + ||X||_F^2) + 1/2 ||P_Omega(A X - L0)||_F^2``
* IsoDP:    ``lam (||A||_* + 1/2 ||X||_F^2) + 1/2 ||P_Omega(A X - L0)||_F^2``

whose ``lam -> 0`` limits are the equality-constrained programs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidInputError
from .linalg import nuclear_norm, svt, svt_with_values
from .recovery import FactorPair
from .sampling import PartialMatrix

CONVERGED = "converged"
MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    ``lam`` defaults per solver when None (see each solver). ``p`` is the
    inner dimension of the bilinear programs (default m). ``continuation``
    is the geometric decrease factor of the lam schedules used by the
    convex and IsoDP solvers; None solves directly at ``lam``. ``init`` selects the bilinear
    initialization: ``"identity"`` (A = I embedded m x p) or ``"random"``
    (Gaussian, drawn from ``seed``).
    """

    lam: float | None = None
    p: int | None = None
    max_iters: int = 500
    rel_tol: float = 1e-6
    seed: int | None = None
    continuation: float | None = 0.5
    init: str = "identity"

    def __post_init__(self):
        if self.lam is not None and not self.lam > 0:
            raise InvalidInputError("lam must be positive")
        if self.max_iters < 1:
            raise InvalidInputError("max_iters must be at least 1")
        if not self.rel_tol > 0:
            raise InvalidInputError("rel_tol must be positive")
        if self.p is not None and self.p < 1:
            raise InvalidInputError("p must be at least 1")
        if self.continuation is not None and not 0 < self.continuation < 1:
            raise InvalidInputError("continuation factor must lie in (0, 1)")
        if self.init not in ("identity", "random"):
            raise InvalidInputError(f"unknown init {self.init!r}")

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


@dataclass
class SolveResult:
    L_hat: np.ndarray
    factors: FactorPair | None
    objective_trace: list = field(default_factory=list)
    iters: int = 0
    stop_reason: str = MAX_ITERS
    fit_mse: float = float("nan")
    lam: float = float("nan")
    solver: str = ""

    def to_dict(self) -> dict:
        return {
            "solver": self.solver,
            "lam": self.lam,
            "iters": self.iters,
            "stop_reason": self.stop_reason,
            "fit_mse": self.fit_mse,
            "objective_trace": [float(v) for v in self.objective_trace],
            "shape": list(self.L_hat.shape),
            "inner_dim": None if self.factors is None else int(self.factors.A.shape[1]),
        }


def _check_partial(partial: PartialMatrix) -> None:
    if len(partial.omega) == 0:
        raise InvalidInputError("sampling set is empty")


def _fit_mse(L: np.ndarray, partial: PartialMatrix) -> float:
    mask = partial.mask
    return float(np.mean((L[mask] - partial.values[mask]) ** 2))


def _rel_change(new: np.ndarray, old: np.ndarray) -> float:
    return float(np.linalg.norm(new - old) / max(1.0, np.linalg.norm(old)))


class _LineBlocks:
    """Observed row indices of every column of a mask, for batched ridge solves.

    ``idx[j, :k_j]`` are the observed rows of column j. The tail is padded
    with the out-of-range row ``m``, which the solves read as zeros.
    """

    def __init__(self, mask: np.ndarray):
        m, n = mask.shape
        counts = mask.sum(axis=0)
        k = max(int(counts.max()), 1)
        idx = np.full((n, k), m, dtype=int)
        for j in range(n):
            rows = np.flatnonzero(mask[:, j])
            idx[j, : rows.size] = rows
        self.mask = mask
        self.idx = idx
        self.valid = idx < m
        self.k = k
        self._gram_take = idx[:, :, None] * (m + 1) + idx[:, None, :]
        self._y_take = idx * n + np.arange(n)[:, None]

    def ridge(self, A: np.ndarray, Y: np.ndarray, lam: float) -> np.ndarray:
        """Columns ``x_j = (A_j.T A_j + lam I)^{-1} A_j.T y_j`` with ``A_j = A[Omega^j]``.

        Uses the smaller of the primal (p x p) and kernel (k x k) systems.
        """
        m, p = A.shape
        A0 = np.vstack([A, np.zeros((1, p))])
        yj = np.vstack([Y, np.zeros((1, Y.shape[1]))]).ravel().take(self._y_take)   # (n, k)
        if self.k <= p:
            # kernel blocks are sub-blocks of one Gram matrix
            K = (A0 @ A0.T).ravel().take(self._gram_take)
            diag = np.arange(self.k)
            K[:, diag, diag] += lam
            alpha = np.linalg.solve(K, yj[..., None])[..., 0]
            W = np.zeros(Y.shape)
            W.T[self.mask.T] = alpha[self.valid]
            return A.T @ W
        Aj = A0[self.idx]                                              # (n, k, p)
        Gj = Aj.transpose(0, 2, 1) @ Aj
        Gj[:, np.arange(p), np.arange(p)] += lam
        X = np.linalg.solve(Gj, (Aj.transpose(0, 2, 1) @ yj[..., None]))[..., 0]
        return X.T                                                     # (p, n)


def _spectral_sq(X: np.ndarray) -> float:
    """``||X||_2^2`` as the top eigenvalue of the smaller Gram matrix."""
    G = X @ X.T if X.shape[0] <= X.shape[1] else X.T @ X
    return max(float(np.linalg.eigvalsh(G)[-1]), 0.0)


def default_lambda(partial: PartialMatrix, solver: str) -> float:
    obs = np.abs(partial.observed())
    if solver == "isodp":
        scale = float(obs.mean())
        return 1e-3 * scale if scale > 0 else 1e-3
    scale = float(obs.max())
    return 1e-4 * scale if scale > 0 else 1e-4


# convergence tolerance of the intermediate continuation stages
STAGE_TOL = 1e-4


def _lam_schedule(start: float, lam: float, factor: float | None) -> list:
    """Geometric lam levels from ``start`` down to (and ending at) ``lam``."""
    if factor is None:
        return [lam]
    stages = []
    level = start
    while level > lam:
        stages.append(level)
        level *= factor
    stages.append(lam)
    return stages


def solve_convex_nuclear(partial: PartialMatrix, cfg: SolverConfig | None = None,
                         callback=None) -> SolveResult:
    """Nuclear-norm completion by proximal gradient with lam continuation.

    Each step is ``L <- svt(P_Omega(L0) + P_Omega^perp(L), lam)`` (unit step,
    the data term's gradient is 1-Lipschitz). lam starts at the largest
    observed magnitude and shrinks by ``cfg.continuation`` per stage until
    it reaches ``cfg.lam`` (default ``1e-4 * max |observed|``); each stage
    warm-starts from the previous one. ``max_iters`` caps each stage.
    """
    cfg = cfg or SolverConfig()
    _check_partial(partial)
    lam = cfg.lam if cfg.lam is not None else default_lambda(partial, "convex")
    mask = partial.mask
    Y = partial.values
    stages = _lam_schedule(float(np.abs(partial.observed()).max()), lam, cfg.continuation)

    L = np.zeros(partial.shape)
    trace = []
    iters = 0
    reason = MAX_ITERS
    for stage, lam_s in enumerate(stages):
        final = stage == len(stages) - 1
        tol = cfg.rel_tol if final else max(cfg.rel_tol, STAGE_TOL)
        reason = MAX_ITERS
        for _ in range(cfg.max_iters):
            L_new, sv = svt_with_values(np.where(mask, Y, L), lam_s)
            iters += 1
            resid = np.where(mask, L_new - Y, 0.0)
            trace.append(lam_s * float(sv.sum()) + 0.5 * float(np.sum(resid**2)))
            change = _rel_change(L_new, L)
            L = L_new
            if callback is not None:
                callback({"stage": stage, "lam": lam_s, "L": L})
            if change < tol:
                reason = CONVERGED
                break
    return SolveResult(L, None, trace, iters, reason, _fit_mse(L, partial), lam, "convex")


def _inner_dim(cfg: SolverConfig, m: int) -> int:
    return cfg.p if cfg.p is not None else m


def _init_dictionary(cfg: SolverConfig, partial: PartialMatrix, p: int) -> np.ndarray:
    m = partial.shape[0]
    if cfg.init == "random":
        rng = np.random.default_rng(cfg.seed)
        scale = np.sqrt(max(float(np.abs(partial.observed()).mean()), 1e-12))
        return rng.standard_normal((m, p)) * scale / np.sqrt(p)
    return np.eye(m, p)


def solve_bilinear_frobenius(partial: PartialMatrix, cfg: SolverConfig | None = None,
                             callback=None) -> SolveResult:
    """Alternating exact minimization of the penalized Frobenius bilinear program.

    X-step: per-column ridge regression on ``A[Omega^j]``. A-step: the same
    on the transposed problem, per row. Both are exact block minimizations,
    so the objective never increases. ``lam`` defaults to the IsoDP default.
    """
    cfg = cfg or SolverConfig()
    _check_partial(partial)
    m, n = partial.shape
    lam = cfg.lam if cfg.lam is not None else default_lambda(partial, "isodp")
    p = _inner_dim(cfg, m)
    mask = partial.mask
    Y = partial.values
    cols = _LineBlocks(mask)
    rows = _LineBlocks(mask.T)
    A = _init_dictionary(cfg, partial, p)
    prev = None
    trace = []
    reason = MAX_ITERS
    it = 0
    for it in range(1, cfg.max_iters + 1):
        X = cols.ridge(A, Y, lam)
        A = rows.ridge(X.T, Y.T, lam).T
        L = A @ X
        resid = np.where(mask, L - Y, 0.0)
        trace.append(0.5 * lam * (np.sum(A**2) + np.sum(X**2)) + 0.5 * float(np.sum(resid**2)))
        if callback is not None:
            callback({"iter": it, "A": A, "X": X})
        if prev is not None and _rel_change(L, prev) < cfg.rel_tol:
            reason = CONVERGED
            break
        prev = L
    return SolveResult(L, FactorPair(A, X), trace, it, reason, _fit_mse(L, partial), lam,
                       "bilinear")


def isodp_objective(A: np.ndarray, X: np.ndarray, partial: PartialMatrix, lam: float) -> float:
    resid = np.where(partial.mask, A @ X - partial.values, 0.0)
    return lam * (nuclear_norm(A) + 0.5 * float(np.sum(X**2))) + 0.5 * float(np.sum(resid**2))


ISODP_START = 0.1


def solve_isodp(partial: PartialMatrix, cfg: SolverConfig | None = None,
                callback=None) -> SolveResult:
    """IsoDP by alternating proximal steps, starting from ``A = I``.

    Each iteration:

    1. ``X[:, j] = (A_j.T A_j + lam I)^{-1} A_j.T y_j`` with ``A_j = A[Omega^j]``;
    2. ``grad = P_Omega(A X - L0) X.T`` and ``mu = ||X||_2^2``;
    3. ``A = svt(A - grad / mu, lam / mu)``.

    A stage stops when ``||A X - A_prev X_prev||_F / max(1, ||A_prev X_prev||_F)``
    drops below its tolerance or after ``max_iters`` iterations. With
    ``cfg.continuation`` set, lam runs through geometric stages from
    ``0.1 * max |observed|`` down to ``cfg.lam``, each warm-started from the
    previous dictionary; with None there is a single stage at ``cfg.lam``.
    Lowering lam at a fixed point lowers the objective, so the trace stays
    non-increasing across stages. lam defaults to ``1e-3 * mean |observed|``.
    ``callback`` receives the step internals after every iteration.
    """
    cfg = cfg or SolverConfig()
    _check_partial(partial)
    m, n = partial.shape
    lam = cfg.lam if cfg.lam is not None else default_lambda(partial, "isodp")
    p = _inner_dim(cfg, m)
    mask = partial.mask
    Y = partial.values
    cols = _LineBlocks(mask)
    stages = _lam_schedule(ISODP_START * float(np.abs(partial.observed()).max()), lam,
                           cfg.continuation)
    A = np.eye(m, p)
    X = np.zeros((p, n))
    trace = []
    reason = MAX_ITERS
    it = 0
    for stage, lam_s in enumerate(stages):
        final = stage == len(stages) - 1
        tol = cfg.rel_tol if final else max(cfg.rel_tol, STAGE_TOL)
        prev = None
        reason = MAX_ITERS
        for _ in range(cfg.max_iters):
            it += 1
            X = cols.ridge(A, Y, lam_s)
            mu = _spectral_sq(X)
            if mu == 0.0:
                A = np.zeros_like(A)
                trace.append(isodp_objective(A, X, partial, lam_s))
                reason = CONVERGED
                break
            resid = np.where(mask, A @ X - Y, 0.0)
            Z = A - (resid @ X.T) / mu
            A_new, sv = svt_with_values(Z, lam_s / mu)
            if callback is not None:
                callback({"iter": it, "stage": stage, "A_prev": A, "X": X, "Z": Z, "mu": mu,
                          "A": A_new, "lam": lam_s})
            A = A_new
            L = A @ X
            fit = np.where(mask, L - Y, 0.0)
            trace.append(lam_s * (float(sv.sum()) + 0.5 * float(np.sum(X**2)))
                         + 0.5 * float(np.sum(fit**2)))
            if prev is not None and _rel_change(L, prev) < tol:
                reason = CONVERGED
                break
            prev = L
    L = A @ X
    return SolveResult(L, FactorPair(A, X), trace, it, reason, _fit_mse(L, partial), lam, "isodp")


def schatten23_objective(L) -> float:
    """``3/2 * sum(sigma_i^(2/3))``: the smallest ``||A||_* + 1/2 ||X||_F^2`` over ``A X = L``."""
    L = np.asarray(L, dtype=float)
    if L.size == 0:
        return 0.0
    s = np.linalg.svd(L, compute_uv=False)
    return float(1.5 * np.sum(s ** (2.0 / 3.0)))


SOLVERS = {
    "convex": solve_convex_nuclear,
    "bilinear": solve_bilinear_frobenius,
    "isodp": solve_isodp,
}


def get_solver(name: str):
    try:
        return SOLVERS[name]
    except KeyError:
        raise InvalidInputError(f"unknown solver {name!r}; choose from {sorted(SOLVERS)}") from None
