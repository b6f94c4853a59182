"""Experiment protocols: phase grids, condition-number sweeps, rank-targeted fits
and holdout evaluation.

Every random instance is drawn from a seed derived from the global seed and
the cell coordinates, so results do not depend on execution order or on the
number of worker processes.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import gamma_pair, is_pair_isomeric
from .errors import EmptyLineError, InvalidInputError
from .forecasting import SeriesTask, convolution_matrix, embed_task, sine_series
from .metrics import SUCCESS_PSNR, mse, psnr, rank_estimate, relative_error
from .sampling import PartialMatrix, SamplingSet, gen_diagonal_band_mask, gen_uniform_mask
from .solvers import SolverConfig, get_solver

FAMILIES = ("uniform", "nonuniform")
EXACT_REL_ERR = 1e-4
GRID_HEADER = ("r0", "fraction", "solver", "successes", "trials")

DESK_RANKS = (1, 5, 10, 20, 30, 40)
DESK_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
FULL_RANKS = (1,) + tuple(range(5, 100, 5))
FULL_FRACTIONS = (0.01,) + tuple(round(0.05 * k, 2) for k in range(1, 20))


def worker_count(workers=None) -> int:
    """Explicit ``workers``, else ``ISOPLETE_THREADS``, else 1."""
    if workers is None:
        env = os.environ.get("ISOPLETE_THREADS")
        if env is None:
            return 1
        try:
            workers = int(env)
        except ValueError:
            raise InvalidInputError(f"ISOPLETE_THREADS must be an integer, got {env!r}") from None
    if workers < 1:
        raise InvalidInputError("worker count must be at least 1")
    return workers


def _map(fn, jobs, workers):
    if workers == 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


@dataclass
class ExperimentGrid:
    """Axes and seeds of a phase-transition experiment on ``m x n`` matrices.

    ``mask_family`` is ``"uniform"`` (Bernoulli) or ``"nonuniform"`` (the
    circular diagonal band). ``counts`` maps a solver name to its
    ``(len(rank_axis), len(fraction_axis))`` success counts once run.
    """

    rank_axis: tuple = DESK_RANKS
    fraction_axis: tuple = DESK_FRACTIONS
    mask_family: str = "uniform"
    trials: int = 10
    seed: int = 0
    m: int = 50
    n: int = 50
    solver_config: SolverConfig = field(
        default_factory=lambda: SolverConfig(max_iters=300, continuation=0.25))
    counts: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rank_axis = tuple(int(r) for r in self.rank_axis)
        self.fraction_axis = tuple(float(f) for f in self.fraction_axis)
        if not self.rank_axis or not self.fraction_axis:
            raise InvalidInputError("grid axes must be non-empty")
        if self.mask_family not in FAMILIES:
            raise InvalidInputError(f"mask_family must be one of {FAMILIES}")
        if self.trials < 1:
            raise InvalidInputError("trials must be at least 1")
        if any(r < 1 for r in self.rank_axis):
            raise InvalidInputError("ranks must be positive")
        if any(not 0 < f <= 1 for f in self.fraction_axis):
            raise InvalidInputError("fractions must lie in (0, 1]")

    @classmethod
    def full_scale(cls, mask_family: str = "uniform", seed: int = 0) -> "ExperimentGrid":
        return cls(FULL_RANKS, FULL_FRACTIONS, mask_family, 20, seed, 100, 100)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rank_axis), len(self.fraction_axis)

    def cells(self):
        for a in range(len(self.rank_axis)):
            for b in range(len(self.fraction_axis)):
                yield a, b

    def instance(self, a: int, b: int, trial: int) -> tuple[np.ndarray, SamplingSet]:
        """Ground truth ``B @ C`` (Gaussian factors) and mask of one trial."""
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, a, b, trial]))
        r = self.rank_axis[a]
        L0 = rng.standard_normal((self.m, r)) @ rng.standard_normal((r, self.n))
        f = self.fraction_axis[b]
        if self.mask_family == "uniform":
            omega = gen_uniform_mask(self.m, self.n, f, seed=rng)
        else:
            omega = gen_diagonal_band_mask(self.m, self.n, f)
        return L0, omega


@dataclass
class TrialRecord:
    r_idx: int
    f_idx: int
    trial: int
    pair_isomeric: bool
    psnr: dict
    rel_err: dict

    def success(self, solver: str) -> bool:
        return self.psnr[solver] >= SUCCESS_PSNR

    def exact(self, solver: str) -> bool:
        return self.success(solver) and self.rel_err[solver] <= EXACT_REL_ERR


@dataclass
class GridReport:
    grid: ExperimentGrid
    solvers: tuple
    records: list

    def counts(self, solver: str) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=int)
        for rec in self.records:
            out[rec.r_idx, rec.f_idx] += rec.success(solver)
        return out

    def exact_counts(self, solver: str) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=int)
        for rec in self.records:
            out[rec.r_idx, rec.f_idx] += rec.exact(solver)
        return out

    def isomeric_counts(self) -> np.ndarray:
        out = np.zeros(self.grid.shape, dtype=int)
        for rec in self.records:
            out[rec.r_idx, rec.f_idx] += rec.pair_isomeric
        return out

    def totals(self) -> dict:
        return {s: int(self.counts(s).sum()) for s in self.solvers}

    def rows(self):
        for s in self.solvers:
            c = self.counts(s)
            for a, b in self.grid.cells():
                yield (self.grid.rank_axis[a], self.grid.fraction_axis[b], s, int(c[a, b]),
                       self.grid.trials)

    def containment_violations(self, solver: str) -> list:
        """Trials recovered exactly although the instance is not pair isomeric."""
        return [(r.r_idx, r.f_idx, r.trial) for r in self.records
                if r.exact(solver) and not r.pair_isomeric]

    def to_dict(self) -> dict:
        return {
            "m": self.grid.m, "n": self.grid.n,
            "mask_family": self.grid.mask_family,
            "trials": self.grid.trials, "seed": self.grid.seed,
            "rank_axis": list(self.grid.rank_axis),
            "fraction_axis": list(self.grid.fraction_axis),
            "totals": self.totals(),
            "counts": {s: self.counts(s).tolist() for s in self.solvers},
            "isomeric_counts": self.isomeric_counts().tolist(),
        }


def _pair_isomeric_safe(L0: np.ndarray, omega: SamplingSet) -> bool:
    try:
        return bool(is_pair_isomeric(L0, omega))
    except EmptyLineError:
        # an unobserved row or column can never keep a nonzero rank
        return False


def _run_trial(job) -> TrialRecord:
    grid, solvers, a, b, trial, check_isomerism = job
    L0, omega = grid.instance(a, b, trial)
    partial = PartialMatrix.from_dense(L0, omega)
    scores, errs = {}, {}
    for name in solvers:
        if len(omega) == 0:
            scores[name], errs[name] = -np.inf, np.inf
            continue
        L_hat = get_solver(name)(partial, grid.solver_config).L_hat
        scores[name] = psnr(L0, L_hat)
        errs[name] = relative_error(L0, L_hat)
    iso = _pair_isomeric_safe(L0, omega) if check_isomerism else False
    return TrialRecord(a, b, trial, iso, scores, errs)


def run_phase_grid(grid: ExperimentGrid, solvers=("convex", "isodp"), workers=None,
                   check_isomerism: bool = True) -> GridReport:
    """Count PSNR >= 40 recoveries per cell and solver.

    With ``check_isomerism`` each trial also records whether its instance is
    pair isomeric, which makes the report usable for containment checks.
    """
    solvers = tuple(solvers)
    for s in solvers:
        get_solver(s)
    jobs = [(grid, solvers, a, b, t, check_isomerism)
            for a, b in grid.cells() for t in range(grid.trials)]
    records = _map(_run_trial, jobs, worker_count(workers))
    report = GridReport(grid, solvers, records)
    grid.counts = {s: report.counts(s) for s in solvers}
    return report


def run_isomerism_region(grid: ExperimentGrid, workers=None) -> np.ndarray:
    """Per-cell count of pair-isomeric instances (no solver is run)."""
    report = run_phase_grid(grid, solvers=(), workers=workers, check_isomerism=True)
    return report.isomeric_counts()


def run_rcn_sweep(m_list=(40, 80, 160), rho_list=(0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1),
                  route: str = "pinv") -> list:
    """``gamma_pair`` of sine-circulant forecasting problems.

    Rows are ``(m, rho0, missing_rate, gamma_pair)`` where the first
    ``round(rho0 * m)`` samples are observed.
    """
    rows = []
    for m in m_list:
        x = sine_series(m)
        L0 = convolution_matrix(x)
        for rho in rho_list:
            l = max(1, int(round(rho * m)))
            omega = embed_task(SeriesTask(x[:l], m)).omega
            g = gamma_pair(L0, omega, route=route)
            rows.append((m, float(rho), 1.0 - l / m, float(g)))
    return rows


@dataclass
class RankFit:
    solver: str
    target_rank: int
    achieved_rank: int
    lam: float
    train_mse: float
    probes: int


def _probe(partial, solver, base_cfg, lam):
    L = get_solver(solver)(partial, base_cfg.with_(lam=lam)).L_hat
    return rank_estimate(L), mse(partial.observed(), L[partial.mask])


def fit_target_rank(partial: PartialMatrix, solver: str, target: int,
                    cfg: SolverConfig | None = None, max_probes: int = 30,
                    bracket=None) -> RankFit:
    """Bisection on ``log lam`` until the recovered rank equals ``target``.

    Larger lam gives lower rank. When no probe hits the target exactly, the
    probe with the closest rank (then the smallest training error) is
    reported.
    """
    cfg = cfg or SolverConfig()
    scale = float(np.abs(partial.observed()).max()) or 1.0
    lo, hi = bracket if bracket is not None else (1e-8 * scale, 10.0 * scale)
    lo, hi = np.log(lo), np.log(hi)
    best = None
    for k in range(1, max_probes + 1):
        mid = 0.5 * (lo + hi)
        lam = float(np.exp(mid))
        rank, err = _probe(partial, solver, cfg, lam)
        key = (abs(rank - target), err)
        if best is None or key < best[0]:
            best = (key, RankFit(solver, target, rank, lam, err, k))
        if rank == target:
            break
        if rank > target:
            lo = mid
        else:
            hi = mid
    fit = best[1]
    fit.probes = k
    return fit


def run_rank_constrained_fit(partial: PartialMatrix, solvers=("convex", "isodp"),
                             target_ranks=range(6, 13), cfg: SolverConfig | None = None,
                             max_probes: int = 30) -> list:
    """Training MSE of each solver with lam tuned to hit each target rank."""
    target_ranks = list(target_ranks)
    if not target_ranks:
        raise InvalidInputError("target_ranks must be non-empty")
    return [fit_target_rank(partial, s, r, cfg, max_probes)
            for s in solvers for r in target_ranks]


def synthetic_ratings(m: int = 60, n: int = 50, rank: int = 3, observed: float = 0.3,
                      seed: int = 0, low: float = 1.0, high: float = 5.0):
    """Integer ratings from a clipped low-rank model, as ``(user, item, rating)`` triplets.

    The latent matrix is rescaled to centre 3 with spread 1, rounded and
    clipped to ``[low, high]``.
    """
    rng = np.random.default_rng(seed)
    Z = rng.standard_normal((m, rank)) @ rng.standard_normal((rank, n)) / np.sqrt(rank)
    R = np.clip(np.rint(0.5 * (low + high) + Z), low, high)
    mask = rng.random((m, n)) < observed
    return [(int(i), int(j), float(R[i, j])) for i, j in np.argwhere(mask)]


@dataclass
class HoldoutReport:
    test_mse: dict
    n_train: int
    n_test: int

    def to_dict(self) -> dict:
        return {"test_mse": dict(self.test_mse), "n_train": self.n_train, "n_test": self.n_test}


def run_holdout_eval(triplets, holdout_fraction: float = 0.1,
                     baselines=("random", "average"), solvers=("isodp",),
                     cfg: SolverConfig | None = None, seed: int = 0) -> HoldoutReport:
    """Seeded train/test split of ``(row, col, value)`` triplets and test MSE.

    Indices are dense 0-based. The random baseline draws uniformly from the
    observed value range (integers when all values are integral), the average
    baseline predicts the global training mean. Test entries whose row or
    column has no training data are predicted by the training mean.
    """
    data = [(int(i), int(j), float(v)) for i, j, v in triplets]
    if not data:
        raise InvalidInputError("triplet data must be non-empty")
    if not 0 < holdout_fraction < 1:
        raise InvalidInputError("holdout_fraction must lie in (0, 1)")
    m = max(t[0] for t in data) + 1
    n = max(t[1] for t in data) + 1
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(data))
    n_test = max(1, int(round(holdout_fraction * len(data))))
    test = [data[k] for k in perm[:n_test]]
    train = [data[k] for k in perm[n_test:]]
    if not train:
        raise InvalidInputError("holdout leaves no training data")
    truth = np.array([v for _, _, v in test])
    rows = np.array([i for i, _, _ in test])
    cols = np.array([j for _, j, _ in test])
    tr_vals = np.array([v for _, _, v in train])
    mean = float(tr_vals.mean())

    out = {}
    for b in baselines:
        if b == "average":
            pred = np.full(n_test, mean)
        elif b == "random":
            lo, hi = float(tr_vals.min()), float(tr_vals.max())
            if np.all(tr_vals == np.rint(tr_vals)):
                pred = rng.integers(int(lo), int(hi) + 1, size=n_test).astype(float)
            else:
                pred = rng.uniform(lo, hi, size=n_test)
        else:
            raise InvalidInputError(f"unknown baseline {b!r}")
        out[b] = mse(truth, pred)

    partial = PartialMatrix.from_entries(m, n, train)
    seen_r = np.zeros(m, dtype=bool)
    seen_c = np.zeros(n, dtype=bool)
    seen_r[[i for i, _, _ in train]] = True
    seen_c[[j for _, j, _ in train]] = True
    known = seen_r[rows] & seen_c[cols]
    for s in solvers:
        L_hat = get_solver(s)(partial, cfg or SolverConfig()).L_hat
        pred = np.where(known, L_hat[rows, cols], mean)
        out[s] = mse(truth, pred)
    return HoldoutReport(out, len(train), n_test)
