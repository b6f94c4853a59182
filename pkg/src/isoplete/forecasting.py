"""Univariate forecasting by completing the circulant embedding of a series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import DiagnosticsReport, diagnose
from .errors import InvalidInputError
from .linalg import skinny_svd
from .metrics import rank_estimate
from .sampling import PartialMatrix, circulant_index, mask_from_convolution
from .solvers import SolveResult, SolverConfig, get_solver


def convolution_matrix(x) -> np.ndarray:
    """Circulant matrix whose column j is ``x`` shifted down by j positions.

    Entry ``(t, j)`` is ``x[(t - j) mod m]``.
    """
    x = np.asarray(x, dtype=float).ravel()
    if x.size < 1:
        raise InvalidInputError("series must be non-empty")
    return x[circulant_index(x.size)]


def deconvolve(L) -> np.ndarray:
    """Average each circulant orbit: ``x[t] = mean_j L[(t + j) mod m, j]``.

    This is the least-squares projection onto circulant matrices, and the
    exact inverse of :func:`convolution_matrix`.
    """
    L = np.asarray(L, dtype=float)
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise InvalidInputError("deconvolve needs a square matrix")
    m = L.shape[0]
    out = np.zeros(m)
    np.add.at(out, circulant_index(m), L)
    return out / m


@dataclass
class SeriesTask:
    """Forecast a length-``m`` series from its first ``len(values)`` samples."""

    values: np.ndarray
    m: int
    solver: str = "convex"
    config: SolverConfig | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        if not 1 <= self.values.size <= self.m:
            raise InvalidInputError("need 1 <= observed length <= m")

    @property
    def observed_len(self) -> int:
        return int(self.values.size)


@dataclass
class ForecastResult:
    x_hat: np.ndarray
    report: DiagnosticsReport | None
    result: SolveResult
    partial: PartialMatrix


def embed_task(task: SeriesTask) -> PartialMatrix:
    """Partial circulant matrix: entry ``(t, j)`` is observed iff its source sample is."""
    m, l = task.m, task.observed_len
    y = np.zeros(m, dtype=int)
    y[:l] = 1
    omega = mask_from_convolution(y)
    x = np.zeros(m)
    x[:l] = task.values
    return PartialMatrix.from_dense(convolution_matrix(x), omega)


def forecast(task: SeriesTask, truth=None, diagnostics: bool = True) -> ForecastResult:
    """Complete the embedded matrix and read the series back by orbit averaging.

    Observed samples are kept as given. Diagnostics describe the embedded
    problem: on ``convolution_matrix(truth)`` when the full series is supplied,
    otherwise on the recovered matrix truncated at its estimated rank.
    """
    partial = embed_task(task)
    result = get_solver(task.solver)(partial, task.config or SolverConfig())
    x_hat = deconvolve(result.L_hat)
    x_hat[: task.observed_len] = task.values
    report = None
    if diagnostics:
        if truth is not None:
            ref = convolution_matrix(truth)
        else:
            r = rank_estimate(result.L_hat)
            svd = skinny_svd(result.L_hat)
            ref = (svd.U[:, :r] * svd.S[:r]) @ svd.V[:, :r].T
        if np.any(ref):
            report = diagnose(ref, partial.omega, with_witness=False)
    return ForecastResult(x_hat, report, result, partial)


def sine_series(m: int) -> np.ndarray:
    """``x[t] = sin(2 pi t / m)`` for ``t = 1..m``."""
    t = np.arange(1, m + 1)
    return np.sin(2.0 * np.pi * t / m)
